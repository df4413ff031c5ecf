#pragma once

// Decision-to-decision distance and the Gaussian kernel that spreads the
// variance of preceding steps into the current one.
//
// The distance is normalized Levenshtein over Unicode scalar values:
//   d(a, b) = lev(a, b) / max(|a|, |b|, 1)
// computed on the action strings after trimming surrounding whitespace.
// It is symmetric with d(a, a) = 0 and bounded in [0, 1]; it does NOT satisfy
// the triangle inequality, and nothing here relies on it.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace uprop::textdist {

// Decodes UTF-8 into scalar values. Invalid bytes decode to one scalar each
// (offset into a private-use range) so distance stays total and deterministic
// on arbitrary byte strings.
std::vector<char32_t> decode_utf8(std::string_view s);

// Unit-cost edit distance over Unicode scalar values.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Normalized distance in [0, 1]; inputs are trimmed of surrounding
// whitespace and compared case-sensitively.
double decision_distance(std::string_view a, std::string_view b);

// K_tau(x) = ((2*pi)^(-1/2) * exp(-x^2/2))^tau, evaluated in log space.
// Strictly decreasing in x, maximum at x = 0. tau must be >= 1.
double gaussian_kernel(double x, int tau);

// ln K_tau(x) = -(tau/2) * (ln(2*pi) + x^2). Same domain checks.
double log_gaussian_kernel(double x, int tau);

struct KernelParams {
  int tau = 1;  // sharpness exponent, set to N in the estimators
};

}  // namespace uprop::textdist
