#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flakysieve {

enum class ErrorKind {
  kLoad,
  kSplit,
  kLex,
  kMutate,
  kAugment,
  kChunk,
  kEmbed,
  kConfig,
  kShape,
  kSample,
  kTrain,
  kIndex,
  kPredict,
  kScore,
};

std::string_view to_string(ErrorKind kind);

// Base of every error the library raises. `stage` is filled in by the
// experiment pipeline so callers can tell which step failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& detail() const noexcept { return detail_; }

  // Returns a copy tagged with the pipeline stage it escaped from.
  Error with_stage(std::string stage) const;

 private:
  ErrorKind kind_;
  std::string stage_;
  std::string detail_;
};

#define FLAKYSIEVE_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message) : Error(Kind, message) {}     \
  };

FLAKYSIEVE_DEFINE_ERROR(LoadError, ErrorKind::kLoad)
FLAKYSIEVE_DEFINE_ERROR(SplitError, ErrorKind::kSplit)
FLAKYSIEVE_DEFINE_ERROR(LexError, ErrorKind::kLex)
FLAKYSIEVE_DEFINE_ERROR(MutateError, ErrorKind::kMutate)
FLAKYSIEVE_DEFINE_ERROR(AugmentError, ErrorKind::kAugment)
FLAKYSIEVE_DEFINE_ERROR(ChunkError, ErrorKind::kChunk)
FLAKYSIEVE_DEFINE_ERROR(EmbedError, ErrorKind::kEmbed)
FLAKYSIEVE_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
FLAKYSIEVE_DEFINE_ERROR(ShapeError, ErrorKind::kShape)
FLAKYSIEVE_DEFINE_ERROR(SampleError, ErrorKind::kSample)
FLAKYSIEVE_DEFINE_ERROR(TrainError, ErrorKind::kTrain)
FLAKYSIEVE_DEFINE_ERROR(IndexError, ErrorKind::kIndex)
FLAKYSIEVE_DEFINE_ERROR(PredictError, ErrorKind::kPredict)
FLAKYSIEVE_DEFINE_ERROR(ScoreError, ErrorKind::kScore)

#undef FLAKYSIEVE_DEFINE_ERROR

}  // namespace flakysieve
