#pragma once

namespace nlqn {

// Budget accounting shared by all algorithms: an objective value and a
// gradient cost one unit each.
struct EvalCounter {
  long function_evals = 0;
  long gradient_evals = 0;
  long total() const { return function_evals + gradient_evals; }
};

}  // namespace nlqn
