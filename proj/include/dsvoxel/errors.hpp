// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace dsvoxel {

/// Bad value supplied by the caller (out-of-range coordinate, empty batch, ...).
class ArgumentError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Contract between cooperating objects violated: foreign gradient handle,
/// mismatched batch shapes, un-normalized termination weights.
class ContractError : public std::logic_error {
  using std::logic_error::logic_error;
};

/// Malformed input data (COLMAP model, dataset manifest, checkpoint).
class ParseError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem-level failure (missing file, short write).
class IoError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite value surfaced during optimization. Training aborts instead of
/// clamping so that degenerate inputs are visible.
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dsvoxel
