#include "akriging/errors.hpp"

namespace akriging {

DuplicateLocationError::DuplicateLocationError(Combination where)
    : Error("duplicate measurement location " + to_string(where)), location(where)
{
}

NumericalError::NumericalError(const std::string& what, Combination a, Combination b)
    : Error(what + " (near-duplicate locations " + to_string(a) + " and " + to_string(b) + ")"),
      has_pair(true),
      first(a),
      second(b)
{
}

OracleMiss::OracleMiss(Combination where)
    : Error("no measurement available for " + to_string(where)), location(where)
{
}

}  // namespace akriging
