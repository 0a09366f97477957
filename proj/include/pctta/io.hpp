// Copyright 2026 The pctta Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pctta/point_cloud.hpp"

namespace pctta {

enum class CloudFormat { Xyz, PlyAscii, PlyBinary };

/// XYZ text ("x y z [nx ny nz]" per line, '#' comments) or PLY (ascii or
/// binary little-endian), chosen by extension; unknown extensions are
/// sniffed for a PLY header.
PointCloud read_point_cloud(const std::filesystem::path& path);
PointCloud parse_xyz(const std::string& text, const std::string& source = "<memory>");

/// Coordinates are written in shortest round-trip form (text) or as float64
/// (binary), so reading back is exact in both cases.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                       CloudFormat format);
/// Format from extension: .ply is binary PLY, anything else XYZ.
void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// OFF or PLY. Polygons are fan-triangulated.
TriangleMesh read_mesh(const std::filesystem::path& path);
TriangleMesh parse_off(const std::string& text, const std::string& source = "<memory>");
void write_mesh_off(const TriangleMesh& mesh, const std::filesystem::path& path);

/// Edges shared by more than two faces. Non-manifold meshes are accepted;
/// this is for diagnostics.
std::size_t count_nonmanifold_edges(const TriangleMesh& mesh);

/// One nonnegative integer per line; trailing blank lines are ignored.
std::vector<int> read_labels(const std::filesystem::path& path);
std::vector<int> parse_labels(const std::string& text, const std::string& source = "<memory>");
void write_labels(const std::vector<int>& labels, const std::filesystem::path& path);

enum class Task { Classification, PartSegmentation };

struct Category {
  std::string name;
  std::set<int> parts;
};

struct ManifestEntry {
  std::filesystem::path cloud;
  std::optional<std::filesystem::path> mesh;
  std::optional<std::filesystem::path> labels;
  int id = 0;          // class id (classification) or category id (segmentation)
  std::string split;   // "train", "test", or empty
};

struct DatasetManifest {
  Task task = Task::Classification;
  std::vector<std::string> classes;
  std::vector<Category> categories;
  std::vector<ManifestEntry> entries;

  /// Total number of part labels (max part id + 1) for segmentation.
  std::size_t part_count() const;
  /// Entries with the given split; every entry when no entry has one.
  std::vector<std::size_t> split_indices(const std::string& split) const;
};

/// JSON manifest; relative paths resolve against the manifest's directory.
/// Every missing file is listed in a single MissingFile error.
DatasetManifest read_manifest(const std::filesystem::path& path);
/// Writes paths relative to the manifest's directory when possible.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace pctta
