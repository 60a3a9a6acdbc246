#pragma once

#include <string>

#include "vcf/frobenius.hpp"

namespace vcf {

/// A fully calibrated model: Frobenius data at the base point, calibration
/// series to a chosen depth, and the constraint index.
struct Model {
  std::string name;
  FrobeniusPoint F;
  Calibration C;
  VirasoroIndex index;
  int depth = 0;
};

/// One-dimensional model with trivial grading and polynomial principal part
/// (the Airy point of the KdV hierarchy): S = I, nu = v = unit.
Model model_kw(int depth);

/// (r-1)-dimensional graded model over the parameter "eps"; S, nu and the
/// vacuum are built from closed forms.  Requires r >= 2.
Model model_rspin(int r, int depth);

/// Two-dimensional model over parameters s1, s2 (with eps_i = s_i^2) and
/// declared denominator factors s1 - s2, s1 + s2.  S and the vacuum come
/// from closed forms; nu is grown from its two-term seed.
Model model_egdd(int depth);

/// "kw", "rspin<r>" (e.g. "rspin3"), or "egdd".
Model model_by_name(const std::string& name, int depth);

}  // namespace vcf
