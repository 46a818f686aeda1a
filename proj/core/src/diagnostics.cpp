// SPDX-License-Identifier: Apache-2.0
#include "specbridge/diagnostics.hpp"

namespace specbridge {

namespace {

std::string render(const std::string& message, const SourcePos& pos) {
  if (pos.line == 0) return message;
  return toString(pos) + ": " + message;
}

} // namespace

std::string toString(const SourcePos& pos) {
  return std::to_string(pos.line) + ":" + std::to_string(pos.column);
}

Error::Error(std::string id, std::string message, SourcePos pos)
    : std::runtime_error(render(message, pos)), id_(std::move(id)), detail_(std::move(message)), pos_(pos) {}

TypeError::TypeError(std::string id, std::string message, SourcePos pos, std::string expected,
                     std::string actual)
    : Error(std::move(id), std::move(message), pos), expected_(std::move(expected)), actual_(std::move(actual)) {}

} // namespace specbridge
