#pragma once

#include "mcinr/volume.hpp"

#include <filesystem>

namespace mcinr {

/// Reads a single-file NIfTI-1 volume (.nii or gzip-compressed .nii.gz).
///
/// Accepts uint8, int16, int32, float32 and float64 payloads in either byte
/// order, applies scl_slope/scl_inter (a zero slope is read as 1) and picks
/// the affine from the sform, then the qform, then diag(pixdim). Non-finite
/// voxels are rejected.
Volume load_volume(const std::filesystem::path& path);

/// Writes a float32 NIfTI-1 file with sform_code = 1. The path suffix decides
/// whether the output is gzip-compressed.
///
/// srow entries are float32, so the full double affine is also stored in a
/// comment extension; load_volume prefers it whenever it agrees with the sform.
void save_volume(const Volume& volume, const std::filesystem::path& path);

}  // namespace mcinr
