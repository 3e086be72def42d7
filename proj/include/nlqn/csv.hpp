#pragma once

#include <cstdio>
#include <string>

namespace nlqn::csv {

// All floats are printed with 17 significant digits so CSV output
// round-trips doubles exactly and identical runs are byte-identical.
inline std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace nlqn::csv
