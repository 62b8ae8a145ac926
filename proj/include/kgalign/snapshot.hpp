#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgalign/kg_store.hpp"

namespace kgalign {

/// Identity of a source file at snapshot time.
struct FileStamp {
  std::string path;
  std::uint64_t size = 0;
  std::int64_t mtime = 0;

  friend bool operator==(const FileStamp&, const FileStamp&) = default;
};

inline constexpr std::uint32_t kSnapshotVersion = 1;

/// Stamps of the files that exist among `files` (a missing optional relation
/// file is simply absent).
std::vector<FileStamp> stamp_files(const GraphFiles& files);

/// Versioned binary image of a loaded graph, written in host byte order.
void write_snapshot(const std::filesystem::path& path, const LoadedGraph& loaded,
                    const std::vector<FileStamp>& stamps);

/// Returns nullopt when the snapshot is missing, has another version or magic,
/// or its stamps no longer match `expected`.
std::optional<LoadedGraph> read_snapshot(const std::filesystem::path& path,
                                         const std::vector<FileStamp>& expected);

}  // namespace kgalign
