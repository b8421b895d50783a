#include "perfcast/stats.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <limits>

namespace perfcast::stats {

double f_survival(double f, double df1, double df2)
{
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  const boost::math::fisher_f_distribution<double> dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

} // namespace perfcast::stats
