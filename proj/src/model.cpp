#include "pf/model.hpp"

#include <cstdint>
#include <cstdio>

namespace pf {

std::string to_string(Taper t) {
  switch (t) {
    case Taper::Sharp: return "sharp";
    case Taper::SmoothCubic: return "smooth_cubic";
    case Taper::Vanishing: return "vanishing";
  }
  return "unknown";
}

Taper taper_from_string(const std::string& s) {
  if (s == "sharp" || s == "Sharp") return Taper::Sharp;
  if (s == "smooth_cubic" || s == "SmoothCubic" || s == "smooth") return Taper::SmoothCubic;
  if (s == "vanishing") return Taper::Vanishing;
  throw ValidationError("unknown taper '" + s + "'");
}

std::string CutoffProfile::hash() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s-%.17g", to_string(taper).c_str(), lambda);
  // FNV-1a keeps file names short and stable across platforms.
  std::uint64_t h = 1469598103934665603ull;
  for (const char* c = buf; *c; ++c) {
    h ^= static_cast<unsigned char>(*c);
    h *= 1099511628211ull;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void validate(const CutoffProfile& profile) {
  if (!std::isfinite(profile.lambda) || !(profile.lambda > 1.0))
    throw ValidationError("cutoff lambda must be a finite number > 1");
}

double kappa_eval(const CutoffProfile& profile, double t) {
  if (!(t >= 0.0)) throw DomainError("kappa_eval: negative or NaN argument");
  const double lam = profile.lambda;
  switch (profile.taper) {
    case Taper::Vanishing:
      return 0.0;
    case Taper::Sharp:
      return t <= lam ? 1.0 : 0.0;
    case Taper::SmoothCubic: {
      if (t <= lam - 1.0) return 1.0;
      if (t >= lam) return 0.0;
      const double s = t - (lam - 1.0);
      return 1.0 - s * s * (3.0 - 2.0 * s);
    }
  }
  return 0.0;
}

double form_factor_radial(const CutoffProfile& profile, double r) {
  if (!(r > 0.0)) throw SingularPointError("form_factor: |k| = 0");
  return kappa_eval(profile, r) / (2.0 * M_PI * std::sqrt(r));
}

}  // namespace pf
