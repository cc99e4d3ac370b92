#pragma once

#include <iosfwd>
#include <string>

#include "meltcast/conformal.hpp"
#include "meltcast/gbm.hpp"

// Model containers are little-endian binary files:
//
//   booster:    "MCBOOST\0"  u32 version  payload
//   calibrator: "MCCALIB\0"  u32 version  payload
//
// Strings are u32 length + bytes, doubles are IEEE-754 binary64 bit
// patterns, so a save/load round trip reproduces predictions bit for bit.
// Trees are stored as a preorder node list; see model_io.cpp for the exact
// field order of each record.

namespace meltcast::model_io {

inline constexpr unsigned kBoosterFormatVersion = 1;
inline constexpr unsigned kCalibratorFormatVersion = 1;

void save_booster(const gbm::TrainedBooster& booster, std::ostream& out);
[[nodiscard]] gbm::TrainedBooster load_booster(std::istream& in);
void save_booster_file(const gbm::TrainedBooster& booster, const std::string& path);
[[nodiscard]] gbm::TrainedBooster load_booster_file(const std::string& path);

/// Hex FNV-1a digest of the serialized booster; calibrators record it.
[[nodiscard]] std::string booster_identity(const gbm::TrainedBooster& booster);

void save_calibrator(const conformal::ConformalCalibrator& calibrator, std::ostream& out);
[[nodiscard]] conformal::ConformalCalibrator load_calibrator(std::istream& in);
void save_calibrator_file(const conformal::ConformalCalibrator& calibrator, const std::string& path);
[[nodiscard]] conformal::ConformalCalibrator load_calibrator_file(const std::string& path);

}  // namespace meltcast::model_io
