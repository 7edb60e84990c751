#include "vcc/components.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "vcc/vip_layout.hpp"

namespace vcc {

void validate_component(const Component& c, std::size_t n_c, std::size_t k) {
  if (!is_power_of(c.size, k) || c.size > n_c || n_c % c.size != 0) {
    throw InvalidArgument("component size " + std::to_string(c.size) +
                          " is not a power of " + std::to_string(k) + " dividing " +
                          std::to_string(n_c));
  }
  if (c.index == 0 || c.index > n_c / c.size) {
    throw InvalidArgument("component (s=" + std::to_string(c.size) +
                          ", x=" + std::to_string(c.index) + ") out of range for n_c=" +
                          std::to_string(n_c));
  }
}

template <std::floating_point T>
std::vector<T> component_vector(const Component& c, std::size_t n_c) {
  if (c.size == 0 || n_c % c.size != 0 || c.index == 0 || c.last() > n_c) {
    throw InvalidArgument("component (s=" + std::to_string(c.size) +
                          ", x=" + std::to_string(c.index) + ") out of range for n_c=" +
                          std::to_string(n_c));
  }
  std::vector<T> v(n_c, T(0));
  std::fill(v.begin() + static_cast<std::ptrdiff_t>(c.first()),
            v.begin() + static_cast<std::ptrdiff_t>(c.last()),
            T(1) / static_cast<T>(c.size));
  return v;
}

template <std::floating_point T>
std::vector<T> segment_mean(const BasicMatrix<T>& rows, const Component& c) {
  if (c.size == 0 || c.index == 0 || c.last() > rows.rows()) {
    throw InvalidArgument("segment_mean: component (s=" + std::to_string(c.size) +
                          ", x=" + std::to_string(c.index) + ") exceeds " +
                          std::to_string(rows.rows()) + " rows");
  }
  std::vector<T> mean(rows.cols(), T(0));
  for (std::size_t i = c.first(); i < c.last(); ++i) {
    auto r = rows.row(i);
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += r[j];
  }
  for (T& v : mean) v /= static_cast<T>(c.size);
  return mean;
}

ComponentSet::ComponentSet(std::vector<Component> items, std::size_t n_c, std::size_t k)
    : items_(std::move(items)), n_c_(n_c), k_(k) {
  if (!is_power_of(n_c, k)) {
    throw InvalidArgument("component set: n_c=" + std::to_string(n_c) +
                          " is not a power of k=" + std::to_string(k));
  }
  for (const Component& c : items_) validate_component(c, n_c, k);
  std::sort(items_.begin(), items_.end(),
            [](const Component& a, const Component& b) { return a.first() < b.first(); });
  std::size_t covered = 0;
  for (const Component& c : items_) {
    if (c.first() != covered) {
      throw InvalidArgument(c.first() < covered
                                ? "component set: supports overlap at row " +
                                      std::to_string(c.first())
                                : "component set: row " + std::to_string(covered) +
                                      " is not covered");
    }
    covered = c.last();
  }
  if (covered != n_c) {
    throw InvalidArgument("component set covers " + std::to_string(covered) + " of " +
                          std::to_string(n_c) + " rows");
  }
}

ComponentSet ComponentSet::root(std::size_t n_c, std::size_t k) {
  return ComponentSet({Component{n_c, 1}}, n_c, k);
}

ComponentSet ComponentSet::singletons(std::size_t n_c, std::size_t k) {
  std::vector<Component> items;
  items.reserve(n_c);
  for (std::size_t x = 1; x <= n_c; ++x) items.push_back({1, x});
  return ComponentSet(std::move(items), n_c, k);
}

std::vector<std::size_t> ComponentSet::multiplicities() const {
  std::vector<std::size_t> out;
  out.reserve(items_.size());
  for (const Component& c : items_) out.push_back(c.size);
  return out;
}

std::size_t ComponentSet::find(const Component& c) const {
  auto it = std::lower_bound(
      items_.begin(), items_.end(), c.first(),
      [](const Component& item, std::size_t row) { return item.first() < row; });
  if (it != items_.end() && *it == c) return static_cast<std::size_t>(it - items_.begin());
  return items_.size();
}

template <std::floating_point T>
BasicMatrix<T> dense_S(const ComponentSet& set) {
  BasicMatrix<T> s(set.size(), set.n_c());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Component& c = set[i];
    for (std::size_t j = c.first(); j < c.last(); ++j) s(i, j) = T(1) / static_cast<T>(c.size);
  }
  return s;
}

template <std::floating_point T>
BasicMatrix<T> dense_S_pinv(const ComponentSet& set) {
  BasicMatrix<T> p(set.n_c(), set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Component& c = set[i];
    // (S_cᵀ D)_{j,i} = s_i · (1/s_i)
    for (std::size_t j = c.first(); j < c.last(); ++j)
      p(j, i) = static_cast<T>(c.size) * (T(1) / static_cast<T>(c.size));
  }
  return p;
}

void write_plan(std::ostream& out, const ComponentSet& set) {
  for (const Component& c : set.components()) out << c.size << ' ' << c.index << '\n';
}

ComponentSet read_plan(std::istream& in, std::size_t n_c, std::size_t k) {
  std::vector<Component> items;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    Component c;
    std::string extra;
    if (!(fields >> c.size >> c.index) || (fields >> extra)) {
      throw ConfigError("expected 's x', got '" + line + "'", number);
    }
    try {
      validate_component(c, n_c, k);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what(), number);
    }
    items.push_back(c);
  }
  try {
    return ComponentSet(std::move(items), n_c, k);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what(), 0);
  }
}

template std::vector<float> component_vector(const Component&, std::size_t);
template std::vector<double> component_vector(const Component&, std::size_t);
template std::vector<float> segment_mean(const BasicMatrix<float>&, const Component&);
template std::vector<double> segment_mean(const BasicMatrix<double>&, const Component&);
template BasicMatrix<float> dense_S(const ComponentSet&);
template BasicMatrix<double> dense_S(const ComponentSet&);
template BasicMatrix<float> dense_S_pinv(const ComponentSet&);
template BasicMatrix<double> dense_S_pinv(const ComponentSet&);

}  // namespace vcc
