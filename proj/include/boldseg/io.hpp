#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "boldseg/series.hpp"
#include "boldseg/volume.hpp"

namespace boldseg {

// All on-disk rasters are little-endian; this library targets LE hosts only.
static_assert(std::endian::native == std::endian::little,
              "boldseg file I/O assumes a little-endian host");

namespace nifti {

// NIfTI-1 single-file (.nii) subset: datatypes uint8/int16/float32, 3-D only,
// orientation ignored (treated as identity), no 4-D, no compression.
struct Nifti1Header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must pack to 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

}  // namespace nifti

namespace detail {

inline void read_exact(std::ifstream& f, void* dst, std::size_t n, const std::string& path) {
    f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    require(static_cast<std::size_t>(f.gcount()) == n, ErrKind::bad_data, path,
            ": truncated file");
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrKind::io, path, ": cannot open for reading");
    return f;
}

inline std::ofstream open_out(const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrKind::io, path, ": cannot open for writing");
    return f;
}

struct RawGrid {
    Shape3 dim;
    Spacing spacing;
    std::vector<float> data;
};

inline RawGrid read_nifti_raw(const std::string& path) {
    auto f = open_in(path);
    nifti::Nifti1Header h{};
    read_exact(f, &h, sizeof(h), path);
    if (h.sizeof_hdr != 348) {
        std::int32_t sw = h.sizeof_hdr;
        sw = static_cast<std::int32_t>(__builtin_bswap32(static_cast<std::uint32_t>(sw)));
        if (sw == 348) fail(ErrKind::bad_data, path, ": big-endian NIfTI is not supported");
        fail(ErrKind::bad_data, path, ": not a NIfTI-1 file (sizeof_hdr=", h.sizeof_hdr, ")");
    }
    require(std::memcmp(h.magic, "n+1\0", 4) == 0, ErrKind::bad_data, path,
            ": magic is not 'n+1' (single-file NIfTI-1 required)");
    require(h.dim[0] == 3, ErrKind::bad_data, path, ": only 3-D images supported, dim[0]=",
            h.dim[0]);
    Shape3 d{h.dim[1], h.dim[2], h.dim[3]};
    require(d.nx > 0 && d.ny > 0 && d.nz > 0, ErrKind::bad_data, path, ": bad dims ", d.str());
    Spacing s{h.pixdim[1], h.pixdim[2], h.pixdim[3]};
    require(s.sx > 0 && s.sy > 0 && s.sz > 0, ErrKind::bad_data, path,
            ": non-positive pixdim");
    require(h.datatype == nifti::kDtUint8 || h.datatype == nifti::kDtInt16 ||
                h.datatype == nifti::kDtFloat32,
            ErrKind::bad_data, path, ": unsupported datatype ", h.datatype,
            " (uint8/int16/float32 only)");
    require((h.scl_slope == 0.0f || h.scl_slope == 1.0f) && h.scl_inter == 0.0f,
            ErrKind::bad_data, path, ": intensity rescaling (scl_slope/scl_inter) unsupported");
    require(h.vox_offset >= 348.0f, ErrKind::bad_data, path, ": bad vox_offset ", h.vox_offset);

    f.seekg(static_cast<std::streamoff>(h.vox_offset), std::ios::beg);
    require(f.good(), ErrKind::bad_data, path, ": cannot seek to voxel data");
    std::size_t n = d.size();
    std::vector<float> out(n);
    if (h.datatype == nifti::kDtFloat32) {
        read_exact(f, out.data(), n * 4, path);
    } else if (h.datatype == nifti::kDtInt16) {
        std::vector<std::int16_t> tmp(n);
        read_exact(f, tmp.data(), n * 2, path);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(tmp[i]);
    } else {
        std::vector<std::uint8_t> tmp(n);
        read_exact(f, tmp.data(), n, path);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(tmp[i]);
    }
    return {d, s, std::move(out)};
}

inline nifti::Nifti1Header make_nifti_header(const Shape3& d, const Spacing& s,
                                             std::int16_t dtype, std::int16_t bitpix) {
    nifti::Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(d.nx);
    h.dim[2] = static_cast<std::int16_t>(d.ny);
    h.dim[3] = static_cast<std::int16_t>(d.nz);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = dtype;
    h.bitpix = bitpix;
    h.pixdim[0] = 1.0f;
    h.pixdim[1] = static_cast<float>(s.sx);
    h.pixdim[2] = static_cast<float>(s.sy);
    h.pixdim[3] = static_cast<float>(s.sz);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.xyzt_units = 2;  // mm
    std::strncpy(h.descrip, "boldseg", sizeof(h.descrip) - 1);
    // orientation deliberately identity: qform/sform codes stay 0
    std::memcpy(h.magic, "n+1\0", 4);
    return h;
}

inline void write_nifti_raw(const std::string& path, const nifti::Nifti1Header& h,
                            const void* data, std::size_t bytes) {
    auto f = open_out(path);
    f.write(reinterpret_cast<const char*>(&h), sizeof(h));
    const char ext[4] = {0, 0, 0, 0};  // no header extensions
    f.write(ext, 4);
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    require(f.good(), ErrKind::io, path, ": write failed");
}

}  // namespace detail

inline Volume read_volume_nifti(const std::string& path) {
    auto raw = detail::read_nifti_raw(path);
    return Volume(raw.dim, raw.spacing, std::move(raw.data));
}

inline LabelMap read_label_nifti(const std::string& path) {
    auto raw = detail::read_nifti_raw(path);
    std::vector<std::uint8_t> lbl(raw.data.size());
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        float v = raw.data[i];
        require(v == 0.0f || v == 1.0f, ErrKind::bad_data, path, ": label value ", v,
                " is not binary");
        lbl[i] = static_cast<std::uint8_t>(v);
    }
    return LabelMap(raw.dim, raw.spacing, std::move(lbl));
}

inline void write_volume_nifti(const Volume& v, const std::string& path) {
    auto h = detail::make_nifti_header(v.dim, v.spacing, nifti::kDtFloat32, 32);
    detail::write_nifti_raw(path, h, v.data.data(), v.data.size() * 4);
}

inline void write_label_nifti(const LabelMap& m, const std::string& path) {
    auto h = detail::make_nifti_header(m.dim, m.spacing, nifti::kDtUint8, 8);
    detail::write_nifti_raw(path, h, m.data.data(), m.data.size());
}

// ---------------------------------------------------------------------------
// Native raw format: 32-byte header (magic, version, kind, dims, spacing)
// followed by little-endian float32 voxels, x-fastest; JSON sidecar at
// <path>.json carries provenance.
// ---------------------------------------------------------------------------

enum class RasterKind : char { volume = 'V', label = 'L', weight = 'W', sdf = 'D' };

inline const char* raster_kind_name(RasterKind k) {
    switch (k) {
        case RasterKind::volume: return "volume";
        case RasterKind::label: return "label";
        case RasterKind::weight: return "weight";
        case RasterKind::sdf: return "sdf";
    }
    return "?";
}

namespace detail {

struct NativeHeader {
    char magic[4];         // "BSRW"
    std::uint8_t version;  // 1
    char kind;
    std::uint16_t reserved;
    std::uint32_t dim[3];
    float spacing[3];
};
static_assert(sizeof(NativeHeader) == 32, "native header must pack to 32 bytes");

inline void write_native_sidecar(const std::string& path, RasterKind kind, const Shape3& d,
                                 const Spacing& s, const nlohmann::json& extra) {
    nlohmann::json j;
    j["format"] = "bseg-raw";
    j["version"] = 1;
    j["kind"] = raster_kind_name(kind);
    j["dims"] = {d.nx, d.ny, d.nz};
    j["spacing_mm"] = {s.sx, s.sy, s.sz};
    j["tool"] = "boldseg";
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    auto f = open_out(path + ".json");
    f << j.dump(2) << "\n";
}

inline void write_native(const std::string& path, RasterKind kind, const Shape3& d,
                         const Spacing& s, const float* data,
                         const nlohmann::json& extra = nlohmann::json::object()) {
    NativeHeader h{};
    std::memcpy(h.magic, "BSRW", 4);
    h.version = 1;
    h.kind = static_cast<char>(kind);
    h.dim[0] = static_cast<std::uint32_t>(d.nx);
    h.dim[1] = static_cast<std::uint32_t>(d.ny);
    h.dim[2] = static_cast<std::uint32_t>(d.nz);
    h.spacing[0] = static_cast<float>(s.sx);
    h.spacing[1] = static_cast<float>(s.sy);
    h.spacing[2] = static_cast<float>(s.sz);
    auto f = open_out(path);
    f.write(reinterpret_cast<const char*>(&h), sizeof(h));
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(d.size() * 4));
    require(f.good(), ErrKind::io, path, ": write failed");
    write_native_sidecar(path, kind, d, s, extra);
}

inline RawGrid read_native(const std::string& path, RasterKind expect) {
    auto f = open_in(path);
    NativeHeader h{};
    read_exact(f, &h, sizeof(h), path);
    require(std::memcmp(h.magic, "BSRW", 4) == 0, ErrKind::bad_data, path,
            ": not a boldseg raw file");
    require(h.version == 1, ErrKind::bad_data, path, ": unsupported version ", int(h.version));
    require(h.kind == static_cast<char>(expect), ErrKind::bad_data, path, ": raster kind '",
            h.kind, "' where '", static_cast<char>(expect), "' expected");
    Shape3 d{static_cast<int>(h.dim[0]), static_cast<int>(h.dim[1]),
             static_cast<int>(h.dim[2])};
    require(d.nx > 0 && d.ny > 0 && d.nz > 0, ErrKind::bad_data, path, ": bad dims");
    Spacing s{h.spacing[0], h.spacing[1], h.spacing[2]};
    std::vector<float> data(d.size());
    read_exact(f, data.data(), data.size() * 4, path);
    return {d, s, std::move(data)};
}

}  // namespace detail

inline void write_volume_native(const Volume& v, const std::string& path,
                                const nlohmann::json& extra = nlohmann::json::object()) {
    detail::write_native(path, RasterKind::volume, v.dim, v.spacing, v.data.data(), extra);
}

inline Volume read_volume_native(const std::string& path) {
    auto raw = detail::read_native(path, RasterKind::volume);
    return Volume(raw.dim, raw.spacing, std::move(raw.data));
}

inline void write_label_native(const LabelMap& m, const std::string& path,
                               const nlohmann::json& extra = nlohmann::json::object()) {
    std::vector<float> tmp(m.data.begin(), m.data.end());
    detail::write_native(path, RasterKind::label, m.dim, m.spacing, tmp.data(), extra);
}

inline LabelMap read_label_native(const std::string& path) {
    auto raw = detail::read_native(path, RasterKind::label);
    std::vector<std::uint8_t> lbl(raw.data.size());
    for (std::size_t i = 0; i < raw.data.size(); ++i) {
        require(raw.data[i] == 0.0f || raw.data[i] == 1.0f, ErrKind::bad_data, path,
                ": label value ", raw.data[i], " is not binary");
        lbl[i] = static_cast<std::uint8_t>(raw.data[i]);
    }
    return LabelMap(raw.dim, raw.spacing, std::move(lbl));
}

// Extension-dispatching entry points (.nii or .bvol).
inline bool has_ext(const std::string& path, const char* ext) {
    return std::filesystem::path(path).extension() == ext;
}

inline Volume read_volume(const std::string& path) {
    if (has_ext(path, ".nii")) return read_volume_nifti(path);
    if (has_ext(path, ".bvol")) return read_volume_native(path);
    fail(ErrKind::bad_data, path, ": unknown volume extension (.nii or .bvol)");
}

inline void write_volume(const Volume& v, const std::string& path) {
    if (has_ext(path, ".nii")) return write_volume_nifti(v, path);
    if (has_ext(path, ".bvol")) return write_volume_native(v, path);
    fail(ErrKind::bad_data, path, ": unknown volume extension (.nii or .bvol)");
}

inline LabelMap read_label(const std::string& path) {
    if (has_ext(path, ".nii")) return read_label_nifti(path);
    if (has_ext(path, ".bvol")) return read_label_native(path);
    fail(ErrKind::bad_data, path, ": unknown label extension (.nii or .bvol)");
}

inline void write_label(const LabelMap& m, const std::string& path) {
    if (has_ext(path, ".nii")) return write_label_nifti(m, path);
    if (has_ext(path, ".bvol")) return write_label_native(m, path);
    fail(ErrKind::bad_data, path, ": unknown label extension (.nii or .bvol)");
}

// ---------------------------------------------------------------------------
// Series manifest: frame paths in temporal order, two phase boundaries, and
// the sparse labeled-frame map. Paths are relative to the manifest.
// ---------------------------------------------------------------------------

inline nlohmann::json load_json_file(const std::string& path) {
    auto f = detail::open_in(path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrKind::bad_data, path, ": JSON parse error: ", e.what());
    }
    return j;
}

inline BoldSeries read_series_manifest(const std::string& manifest_path) {
    nlohmann::json j = load_json_file(manifest_path);
    require(j.is_object() && j.value("format", "") == "boldseg-series", ErrKind::bad_data,
            manifest_path, ": not a boldseg-series manifest");
    require(j.contains("frames") && j["frames"].is_array() && !j["frames"].empty(),
            ErrKind::bad_data, manifest_path, ": missing or empty 'frames'");
    require(j.contains("phase_boundaries") && j["phase_boundaries"].is_array() &&
                j["phase_boundaries"].size() == 2,
            ErrKind::bad_data, manifest_path, ": 'phase_boundaries' must be [hyper, return]");

    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& rel) { return (base / rel).string(); };

    std::vector<Volume> frames;
    frames.reserve(j["frames"].size());
    for (const auto& fp : j["frames"]) {
        std::string p = resolve(fp.get<std::string>());
        require(std::filesystem::exists(p), ErrKind::io, manifest_path,
                ": frame file missing: ", p);
        frames.push_back(read_volume(p));
    }
    int hyper = j["phase_boundaries"][0].get<int>();
    int ret = j["phase_boundaries"][1].get<int>();

    std::map<int, LabelMap> labels;
    if (j.contains("labels")) {
        require(j["labels"].is_object(), ErrKind::bad_data, manifest_path,
                ": 'labels' must map frame index -> path");
        for (auto it = j["labels"].begin(); it != j["labels"].end(); ++it) {
            int idx = 0;
            try {
                idx = std::stoi(it.key());
            } catch (...) {
                fail(ErrKind::bad_data, manifest_path, ": label key '", it.key(),
                     "' is not a frame index");
            }
            std::string p = resolve(it.value().get<std::string>());
            require(std::filesystem::exists(p), ErrKind::io, manifest_path,
                    ": label file missing: ", p);
            labels.emplace(idx, read_label(p));
        }
    }
    return BoldSeries(std::move(frames), hyper, ret, std::move(labels));
}

// Writes frames/, labels/ and the manifest under dir. frame_ext: ".bvol" or ".nii".
inline std::string write_series_manifest(const BoldSeries& series, const std::string& dir,
                                         const std::string& frame_ext = ".bvol") {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "frames");
    if (!series.labels.empty()) fs::create_directories(fs::path(dir) / "labels");
    nlohmann::json j;
    j["format"] = "boldseg-series";
    j["version"] = 1;
    j["frames"] = nlohmann::json::array();
    char buf[64];
    for (int t = 0; t < series.frame_count(); ++t) {
        std::snprintf(buf, sizeof(buf), "frames/frame_%04d%s", t, frame_ext.c_str());
        write_volume(series.frames[t], (fs::path(dir) / buf).string());
        j["frames"].push_back(buf);
    }
    j["phase_boundaries"] = {series.hyperoxic_start(), series.return_start()};
    nlohmann::json lbl = nlohmann::json::object();
    for (const auto& [idx, map] : series.labels) {
        std::snprintf(buf, sizeof(buf), "labels/label_%04d%s", idx, frame_ext.c_str());
        write_label(map, (fs::path(dir) / buf).string());
        lbl[std::to_string(idx)] = buf;
    }
    j["labels"] = lbl;
    std::string manifest = (fs::path(dir) / "series.json").string();
    auto f = detail::open_out(manifest);
    f << j.dump(2) << "\n";
    return manifest;
}

// Dataset manifest: lists per-split series manifests, relative to itself.
struct DatasetManifest {
    std::vector<std::string> train, val, test;  // absolute paths after load
};

inline DatasetManifest read_dataset_manifest(const std::string& path) {
    nlohmann::json j = load_json_file(path);
    require(j.is_object() && j.value("format", "") == "boldseg-dataset", ErrKind::bad_data,
            path, ": not a boldseg-dataset manifest");
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    DatasetManifest ds;
    for (const char* key : {"train", "val", "test"}) {
        require(j.contains(key) && j[key].is_array(), ErrKind::bad_data, path,
                ": missing split '", key, "'");
        auto& dst = key == std::string("train") ? ds.train
                    : key == std::string("val") ? ds.val
                                                : ds.test;
        for (const auto& p : j[key]) {
            std::string full = (base / p.get<std::string>()).string();
            require(std::filesystem::exists(full), ErrKind::io, path,
                    ": series manifest missing: ", full);
            dst.push_back(full);
        }
    }
    return ds;
}

inline void write_dataset_manifest(const std::vector<std::string>& train,
                                   const std::vector<std::string>& val,
                                   const std::vector<std::string>& test,
                                   const std::string& path) {
    nlohmann::json j;
    j["format"] = "boldseg-dataset";
    j["version"] = 1;
    j["train"] = train;
    j["val"] = val;
    j["test"] = test;
    auto f = detail::open_out(path);
    f << j.dump(2) << "\n";
}

}  // namespace boldseg
