#ifndef SURVDSA_FORMAT_HPP_
#define SURVDSA_FORMAT_HPP_

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace survdsa {

// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string csv_join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += fields[i];
  }
  return out;
}

}  // namespace survdsa

#endif  // SURVDSA_FORMAT_HPP_
