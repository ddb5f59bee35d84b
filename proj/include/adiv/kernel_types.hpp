#pragma once
// Plain parameter blocks passed to the kernels. No standard-library includes:
// this header is shared with the -mavx2 translation unit.

namespace adiv::kernels {

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

}  // namespace adiv::kernels
