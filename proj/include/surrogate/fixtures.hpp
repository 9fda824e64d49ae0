#pragma once

#include <string>
#include <vector>

#include "surrogate/dsl.hpp"
#include "surrogate/gaussian.hpp"

// The four canonical diagrams used by the self-test, the unit tests and the
// acceptance suite, with their intended role assignments and true effects.
namespace surrogate::fixtures {

struct Fixture {
  std::string name;
  std::string source;  // .pd text
  criteria::Strategy strategy;
  gaussian::Roles roles;
  std::string treatment;
  std::string response;
  double truth_tau_sq;
};

/// Latent response Y; Z is a back-door set for (X, Y); U, W, T measure Y.
const Fixture& fixture_a();
/// Latent treatment Y; Z is a back-door set for (Y, X); U, W, T measure Y.
const Fixture& fixture_b();
/// Latent response Y confounded with X; Z is an instrument given T.
const Fixture& fixture_c();
/// Latent treatment X1 and response X2, each with two surrogates.
const Fixture& fixture_d();

const std::vector<const Fixture*>& all();

/// Fixture A with an added direct edge X -> U (violates the separation of X and U).
std::string fixture_a_with_x_to_u();

dsl::GraphDocument load(const Fixture& f);

}  // namespace surrogate::fixtures
