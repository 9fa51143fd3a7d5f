#pragma once

#include <stdexcept>
#include <string>

namespace multisim {

/// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MULTISIM_ERROR(Name)                                 \
    class Name : public Error {                              \
    public:                                                  \
        explicit Name(const std::string& what) : Error(what) \
        {                                                    \
        }                                                    \
    }

// road
MULTISIM_ERROR(DegenerateSpan);
MULTISIM_ERROR(GenerationExhausted);
// simbench
MULTISIM_ERROR(InvalidRoad);
// ensemble_search
MULTISIM_ERROR(BudgetTooSmall);
MULTISIM_ERROR(ModelMissing);
// baselines
MULTISIM_ERROR(UnknownOrigin);
// analysis
MULTISIM_ERROR(BackendOverlap);
// surrogate
MULTISIM_ERROR(SingleBackendCampaign);
MULTISIM_ERROR(DegenerateDataset);
MULTISIM_ERROR(FoldTooSmall);
// stats
MULTISIM_ERROR(EmptySample);
MULTISIM_ERROR(SampleTooSmall);
MULTISIM_ERROR(PointBeyondReference);
// cli
MULTISIM_ERROR(ConfigError);
MULTISIM_ERROR(MissingCampaign);
MULTISIM_ERROR(InsufficientSeeds);

#undef MULTISIM_ERROR

} // namespace multisim
