#include "opng/quantizer.hpp"

#include <cmath>
#include <string>

namespace opng {

void QuantParams::validate() const {
  if (c1 < 0 || c1 > 4) throw std::domain_error("quantizer exponent c1 must be in [0, 4]");
}

std::uint16_t quantize_log10(double log10_p, const QuantParams& params) {
  if (std::isnan(log10_p) || log10_p > 0.0) throw std::domain_error("quantize: log10 probability must be <= 0");
  const double scaled = std::floor(-std::pow(10.0, params.c1) * log10_p);
  if (!(scaled < params.c2)) return params.c2;
  return static_cast<std::uint16_t>(scaled);
}

std::uint16_t quantize(double p, const QuantParams& params) {
  if (!(p > 0.0 && p <= 1.0)) throw std::domain_error("quantize: probability must be in (0, 1], got " + std::to_string(p));
  return quantize_log10(std::log10(p), params);
}

double dequantize_log10(std::uint16_t q, const QuantParams& params) {
  if (q > params.c2) throw std::domain_error("dequantize: value " + std::to_string(q) + " above cap");
  return -static_cast<double>(q) / std::pow(10.0, params.c1);
}

double dequantize(std::uint16_t q, const QuantParams& params) { return std::pow(10.0, dequantize_log10(q, params)); }

}  // namespace opng
