#include "uprop/textdist.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "uprop/errors.hpp"

namespace uprop::textdist {

namespace {

constexpr char32_t kInvalidByteBase = 0x110000;  // past the Unicode range

std::string_view trim(std::string_view s) {
  auto is_space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
           c == '\v';
  };
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      out.push_back(kInvalidByteBase + c);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kInvalidByteBase + c);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Reject overlong encodings and surrogates so equal strings always
    // decode equally.
    if (ok && len == 2 && cp < 0x80) ok = false;
    if (ok && len == 3 && cp < 0x800) ok = false;
    if (ok && len == 4 && cp < 0x10000) ok = false;
    if (ok && cp >= 0xD800 && cp <= 0xDFFF) ok = false;
    if (ok && cp > 0x10FFFF) ok = false;
    if (!ok) {
      out.push_back(kInvalidByteBase + c);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<char32_t> u = decode_utf8(a);
  std::vector<char32_t> v = decode_utf8(b);
  if (u.size() < v.size()) std::swap(u, v);
  const std::size_t n = u.size();
  const std::size_t m = v.size();
  if (m == 0) return n;

  std::vector<std::size_t> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = diag + (u[i - 1] == v[j - 1] ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
    }
  }
  return row[m];
}

double decision_distance(std::string_view a, std::string_view b) {
  std::string_view ta = trim(a);
  std::string_view tb = trim(b);
  if (ta == tb) return 0.0;
  std::size_t la = decode_utf8(ta).size();
  std::size_t lb = decode_utf8(tb).size();
  std::size_t denom = std::max<std::size_t>({la, lb, 1});
  return static_cast<double>(levenshtein(ta, tb)) /
         static_cast<double>(denom);
}

double log_gaussian_kernel(double x, int tau) {
  if (tau < 1) throw InputError("gaussian_kernel: tau must be >= 1");
  return -0.5 * static_cast<double>(tau) *
         (std::log(2.0 * std::numbers::pi) + x * x);
}

double gaussian_kernel(double x, int tau) {
  return std::exp(log_gaussian_kernel(x, tau));
}

}  // namespace uprop::textdist
