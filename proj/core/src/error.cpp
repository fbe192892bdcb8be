#include "flakysieve/error.hpp"

namespace flakysieve {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kLoad: return "LoadError";
    case ErrorKind::kSplit: return "SplitError";
    case ErrorKind::kLex: return "LexError";
    case ErrorKind::kMutate: return "MutateError";
    case ErrorKind::kAugment: return "AugmentError";
    case ErrorKind::kChunk: return "ChunkError";
    case ErrorKind::kEmbed: return "EmbedError";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kShape: return "ShapeError";
    case ErrorKind::kSample: return "SampleError";
    case ErrorKind::kTrain: return "TrainError";
    case ErrorKind::kIndex: return "IndexError";
    case ErrorKind::kPredict: return "PredictError";
    case ErrorKind::kScore: return "ScoreError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(message) {}

Error Error::with_stage(std::string stage) const {
  Error tagged(kind_, "[" + stage + "] " + detail_);
  tagged.detail_ = detail_;
  tagged.stage_ = std::move(stage);
  return tagged;
}

}  // namespace flakysieve
