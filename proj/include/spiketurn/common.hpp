#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace spiketurn {

// Invalid configuration or argument. CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data. CLI exit code 3.
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Non-finite state or failed numerical routine. CLI exit code 4.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Independent 64-bit seed for sub-stream (stream, index) of a master seed.
// All randomness in the library is drawn from engines seeded this way.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

// Stream identifiers passed to derive_seed.
enum SeedStream : std::uint64_t {
  kStreamNetwork = 1,
  kStreamLevelMap = 2,
  kStreamTraining = 3,
  kStreamClassifier = 4,
  kStreamHmmBaseline = 5,
  kStreamIshii = 6,
  kStreamPng = 7,
  kStreamObjects = 8,
  kStreamSynthetic = 9,
  kStreamGridSearch = 10,
};

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots by the caller so output does not depend on
// scheduling. The exception thrown for the lowest index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace spiketurn
