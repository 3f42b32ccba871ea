#pragma once

#include <filesystem>
#include <string>

#include "meshspec/mesh.hpp"

namespace meshspec {

enum class MeshFormat { off, obj, ply, autodetect };

/// Parse OFF / OBJ / ASCII-PLY. With autodetect the extension decides, then
/// the header. Parse problems raise ParseError with the offending line;
/// quad or larger faces are rejected with the face index.
TriMesh load_mesh(const std::filesystem::path& path,
                  MeshFormat format = MeshFormat::autodetect);

/// Write in the format implied by `format` or the file extension.
/// Coordinates are written with 17 significant digits so a load/save/load
/// round trip reproduces vertices to full double precision.
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               MeshFormat format = MeshFormat::autodetect);

MeshFormat format_from_extension(const std::filesystem::path& path);

}  // namespace meshspec
