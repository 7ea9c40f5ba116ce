#ifndef EIV_SAMPLE_HPP
#define EIV_SAMPLE_HPP

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "eiv/errors.hpp"

namespace eiv {

struct Observation {
  double y;
  double x;
  double z;
};

/// Observed (y, x, z) records.
class Sample {
 public:
  Sample() = default;
  explicit Sample(std::vector<Observation> obs) : obs_(std::move(obs)) {
    for (const auto& o : obs_)
      if (!std::isfinite(o.y) || !std::isfinite(o.x) || !std::isfinite(o.z))
        throw InvalidArgument("Sample: non-finite value");
  }

  std::size_t size() const { return obs_.size(); }
  bool empty() const { return obs_.empty(); }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  const std::vector<Observation>& records() const { return obs_; }
  auto begin() const { return obs_.begin(); }
  auto end() const { return obs_.end(); }

 private:
  std::vector<Observation> obs_;
};

/// Writes the `y,x,z` CSV schema, preceded by `# key=value` metadata lines.
inline void write_sample_csv(std::ostream& os, const Sample& s,
                             const std::vector<std::pair<std::string, std::string>>& meta = {}) {
  for (const auto& [k, v] : meta) os << "# " << k << "=" << v << "\n";
  os << "y,x,z\n" << std::setprecision(17);
  for (const auto& o : s) os << o.y << "," << o.x << "," << o.z << "\n";
}

inline Sample read_sample_csv(std::istream& is) {
  std::string line;
  bool header = false;
  std::vector<Observation> obs;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "y,x,z") throw InvalidArgument("sample CSV: expected header 'y,x,z', got '" + line + "'");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
      throw InvalidArgument("sample CSV: malformed row at line " + std::to_string(lineno));
    try {
      obs.push_back({std::stod(a), std::stod(b), std::stod(c)});
    } catch (const std::exception&) {
      throw InvalidArgument("sample CSV: non-numeric value at line " + std::to_string(lineno));
    }
  }
  if (!header) throw InvalidArgument("sample CSV: missing header");
  if (obs.empty()) throw InsufficientData("sample CSV: no observations");
  return Sample(std::move(obs));
}

inline Sample read_sample_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("cannot open sample file " + path);
  return read_sample_csv(f);
}

}  // namespace eiv

#endif  // EIV_SAMPLE_HPP
