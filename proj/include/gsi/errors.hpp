#pragma once

#include <stdexcept>
#include <string>

namespace gsi {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define GSI_ERROR_TYPE(Name) \
  struct Name : Error {      \
    using Error::Error;      \
  };

GSI_ERROR_TYPE(DimensionMismatch)
GSI_ERROR_TYPE(InvalidK)
GSI_ERROR_TYPE(NotSymmetric)
GSI_ERROR_TYPE(NoConvergence)
GSI_ERROR_TYPE(DuplicatePoints)
GSI_ERROR_TYPE(InvalidProbability)
GSI_ERROR_TYPE(InvalidEntry)
GSI_ERROR_TYPE(StaleTape)
GSI_ERROR_TYPE(ShapeMismatch)
GSI_ERROR_TYPE(InvalidArchitecture)
GSI_ERROR_TYPE(EmptyDataset)
GSI_ERROR_TYPE(DivergedLoss)
GSI_ERROR_TYPE(InvalidDecay)
GSI_ERROR_TYPE(BadMagic)
GSI_ERROR_TYPE(TruncatedFile)
GSI_ERROR_TYPE(UnsupportedType)
GSI_ERROR_TYPE(DegenerateRange)
GSI_ERROR_TYPE(EmptyIndexSet)
GSI_ERROR_TYPE(IndexOutOfRange)
GSI_ERROR_TYPE(ConfigError)
GSI_ERROR_TYPE(IoError)

#undef GSI_ERROR_TYPE

}  // namespace gsi
