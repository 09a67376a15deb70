#pragma once

#include <cstdint>
#include <stdexcept>

namespace opng {

// Probabilities are stored as min(floor(-10^c1 * log10 p), c2) in 2 bytes.
struct QuantParams {
  int c1 = 3;
  std::uint16_t c2 = 29999;

  void validate() const;
};

std::uint16_t quantize(double p, const QuantParams& params = {});
double dequantize(std::uint16_t q, const QuantParams& params = {});

// Same mapping from the log10 domain; log10_p must be <= 0.
std::uint16_t quantize_log10(double log10_p, const QuantParams& params = {});
// -q / 10^c1
double dequantize_log10(std::uint16_t q, const QuantParams& params = {});

}  // namespace opng
