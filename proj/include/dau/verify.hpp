/*
 * Copyright 2026 The DAU-Net Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dau/tensor.hpp"

namespace dau {

// One gradient or equivalence check class, aggregated over instances.
struct CheckResult {
  std::string name;
  double worst = 0.0;      // worst normwise relative error (or abs diff)
  double tolerance = 0.0;
  int instances = 0;

  bool pass() const { return worst <= tolerance; }
};

struct GradcheckOptions {
  std::uint64_t seed = 1;
  int instances = 20;
  // Also check the Gaussian-derivative displacement gradient on smooth inputs.
  bool analytic = false;
  // Harness self-test: perturbs the backprop gradients so the checks fail.
  bool corrupt = false;
};

struct GradcheckReport {
  std::vector<CheckResult> checks;

  bool pass() const;
  std::string to_text() const;
};

GradcheckReport run_gradcheck(const GradcheckOptions& opts);

// Normwise relative error ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(const std::vector<double>& a, const std::vector<double>& b);

struct OracleCase {
  Dims input{};
  int features = 0;
  int units = 0;
  double sigma = 0.0;
  double mu_bound = 0.0;
  bool integer_mu = false;
  int margin = 0;
  double max_diff = 0.0;
};

struct OraclecheckOptions {
  std::uint64_t seed = 1;
  int cases = 200;
  bool integer_only = false;
  double tolerance = 1e-5;
  double integer_tolerance = 1e-6;
};

struct OraclecheckReport {
  std::vector<OracleCase> cases;
  double max_diff = 0.0;          // over sub-pixel cases
  double max_diff_integer = 0.0;  // over integer-displacement cases
  double tolerance = 0.0;
  double integer_tolerance = 0.0;

  bool pass() const;
  std::string to_text() const;
};

// Fast path vs explicit-filter oracle on random single-precision layers,
// compared on the interior where every bilinear tap stays inside the plane.
OraclecheckReport run_oraclecheck(const OraclecheckOptions& opts);

}  // namespace dau
