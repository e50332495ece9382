#pragma once

namespace mfb {

double norm_pdf(double x);
double norm_cdf(double x);

/// Standard normal quantile, accurate to a few ulps on (0,1).
double norm_quantile(double u);

}  // namespace mfb
