// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

namespace specbridge {

/// Whole-file read in binary mode; throws ResourceError("missing-resource").
std::string readFile(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void writeFileAtomic(const std::filesystem::path& path, const std::string& content);

} // namespace specbridge
