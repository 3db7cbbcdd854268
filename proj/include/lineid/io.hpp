#pragma once

// File formats: the polar sample CSV (timestamp plus magnitude/angle pairs) and the line-parameter JSON.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "lineid/core.hpp"
#include "lineid/experiments.hpp"

namespace lineid::io {

using Json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) fail(ErrorKind::Io, "read from '" + path + "' failed");
    return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Sample CSV

inline constexpr std::array<std::string_view, 12> phasor_names{"Ua_S", "Ub_S", "Uc_S", "Ua_R", "Ub_R", "Uc_R",
                                                               "Ia_S", "Ib_S", "Ic_S", "Ia_R", "Ib_R", "Ic_R"};
inline constexpr std::size_t sample_csv_columns = 1 + 2 * phasor_names.size();

inline std::vector<std::string> sample_csv_header() {
    std::vector<std::string> h{"timestamp_us"};
    for (auto n : phasor_names) {
        h.push_back(std::string(n) + "_mag");
        h.push_back(std::string(n) + "_ang_deg");
    }
    return h;
}

/// Angle of `p` in degrees, in (-180, 180].
inline double angle_degrees(const Phasor& p) {
    double deg = std::arg(p) * 180.0 / std::numbers::pi;
    if (deg <= -180.0) deg += 360.0;
    return deg;
}

inline Phasor from_polar_degrees(double magnitude, double degrees) {
    // Exact quadrant angles avoid sin(pi) residue.
    if (degrees == 0.0) return {magnitude, 0.0};
    if (degrees == 180.0) return {-magnitude, 0.0};
    if (degrees == 90.0) return {0.0, magnitude};
    if (degrees == -90.0) return {0.0, -magnitude};
    return std::polar(magnitude, degrees * std::numbers::pi / 180.0);
}

inline std::string samples_to_csv(std::span<const SampleRecord> records) {
    std::string out;
    const auto header = sample_csv_header();
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out += ',';
        out += header[c];
    }
    out += '\n';
    for (const auto& r : records) {
        if (!r.finite()) fail(ErrorKind::InvalidArgument, "cannot write a record with non-finite phasors");
        out += std::to_string(r.timestamp_us);
        for (std::size_t k = 0; k < SampleRecord::phasor_count; ++k) {
            const Phasor& p = r.phasor(k);
            out += ',';
            out += format_double(std::abs(p));
            out += ',';
            out += format_double(angle_degrees(p));
        }
        out += '\n';
    }
    return out;
}

inline void write_samples_csv(const std::string& path, std::span<const SampleRecord> records) {
    write_text_file(path, samples_to_csv(records));
}

namespace detail {
inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}
} // namespace detail

/// Parses sample CSV text. Errors name the offending line and column.
inline std::vector<SampleRecord> samples_from_csv(std::string_view text) {
    const auto header = sample_csv_header();
    std::vector<SampleRecord> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool seen_header = false;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = detail::trim(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = "sample CSV line " + std::to_string(line_no);
        if (fields.size() != sample_csv_columns)
            fail(ErrorKind::Parse, where + ": expected " + std::to_string(sample_csv_columns) + " columns, found " +
                                       std::to_string(fields.size()));
        if (!seen_header) {
            for (std::size_t c = 0; c < fields.size(); ++c)
                if (detail::trim(fields[c]) != header[c])
                    fail(ErrorKind::Parse, where + ": header column " + std::to_string(c + 1) + " should be '" +
                                               header[c] + "'");
            seen_header = true;
            continue;
        }
        SampleRecord rec;
        const auto ts = detail::trim(fields[0]);
        const auto res = std::from_chars(ts.data(), ts.data() + ts.size(), rec.timestamp_us);
        if (res.ec != std::errc() || res.ptr != ts.data() + ts.size())
            fail(ErrorKind::Parse, where + ", column timestamp_us: invalid integer '" + std::string(ts) + "'");
        for (std::size_t k = 0; k < SampleRecord::phasor_count; ++k) {
            const std::string& mag_name = header[1 + 2 * k];
            const std::string& ang_name = header[2 + 2 * k];
            const double mag = parse_double(detail::trim(fields[1 + 2 * k]), where + ", column " + mag_name);
            const double ang = parse_double(detail::trim(fields[2 + 2 * k]), where + ", column " + ang_name);
            if (!std::isfinite(mag) || mag < 0.0)
                fail(ErrorKind::Parse, where + ", column " + mag_name + ": magnitude must be finite and >= 0");
            if (!std::isfinite(ang))
                fail(ErrorKind::Parse, where + ", column " + ang_name + ": angle must be finite");
            rec.phasor(k) = from_polar_degrees(mag, ang);
        }
        out.push_back(rec);
    }
    if (!seen_header) fail(ErrorKind::Parse, "sample CSV: missing header");
    return out;
}

inline std::vector<SampleRecord> read_samples_csv(const std::string& path) {
    try {
        return samples_from_csv(read_text_file(path));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Parse) throw;
        throw Error(e.kind(), path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// JSON helpers. Complex values are [re, im]; a bare number is real.

inline Json to_json(const Complex& c) { return Json::array({c.real(), c.imag()}); }

template <typename M>
Json matrix_to_json(const M& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if constexpr (std::is_same_v<typename M::Scalar, Complex>)
                row.push_back(to_json(m(i, j)));
            else
                row.push_back(m(i, j));
        }
        rows.push_back(row);
    }
    return rows;
}

inline double json_number(const Json& j, const std::string& where) {
    if (!j.is_number()) fail(ErrorKind::Parse, where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(ErrorKind::Parse, where + ": number must be finite");
    return v;
}

inline Complex json_complex(const Json& j, const std::string& where) {
    if (j.is_number()) return {json_number(j, where), 0.0};
    if (j.is_array() && j.size() == 2) return {json_number(j[0], where + "[0]"), json_number(j[1], where + "[1]")};
    fail(ErrorKind::Parse, where + ": expected a number or [re, im]");
}

inline Matrix3c json_matrix3c(const Json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) fail(ErrorKind::Parse, where + ": expected a 3x3 array");
    Matrix3c m;
    for (int i = 0; i < 3; ++i) {
        const std::string row_where = where + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != 3) fail(ErrorKind::Parse, row_where + ": expected 3 entries");
        for (int k = 0; k < 3; ++k) m(i, k) = json_complex(j[i][k], row_where + "[" + std::to_string(k) + "]");
    }
    return m;
}

inline Matrix3r json_matrix3r(const Json& j, const std::string& where) {
    const Matrix3c m = json_matrix3c(j, where);
    if (m.imag().cwiseAbs().maxCoeff() != 0.0) fail(ErrorKind::Parse, where + ": expected real entries");
    return m.real();
}

inline void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                                const std::string& where) {
    if (!obj.is_object()) fail(ErrorKind::Parse, where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) fail(ErrorKind::Parse, where + ": unknown key '" + key + "'");
    }
}

inline Json parse_json(std::string_view text, const std::string& where) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::Parse, where + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Line-parameter JSON
//
// Accepted forms (plus optional "name" / "description" strings):
//   {"z_abc": 3x3 complex, "b_abc": 3x3 real}
//   {"z0": c, "z1": c, "b0": x, "b1": x [, "z2": c, "b2": x]}   transposed line
//   {"z_012": 3x3 complex, "b_012": 3x3 complex}                coupled sequences

inline LineParameters line_from_json(const Json& j, const std::string& where = "line parameters") {
    reject_unknown_keys(j, {"name", "description", "z_abc", "b_abc", "z0", "z1", "z2", "b0", "b1", "b2", "z_012", "b_012"},
                        where);
    for (auto k : {"name", "description"})
        if (j.contains(k) && !j[k].is_string()) fail(ErrorKind::Parse, where + ": '" + k + "' must be a string");
    const bool phase = j.contains("z_abc") || j.contains("b_abc");
    const bool seq_scalar = j.contains("z0") || j.contains("z1") || j.contains("b0") || j.contains("b1");
    const bool seq_matrix = j.contains("z_012") || j.contains("b_012");
    if (int(phase) + int(seq_scalar) + int(seq_matrix) != 1)
        fail(ErrorKind::Parse, where + ": give exactly one of z_abc/b_abc, z0/z1/b0/b1 or z_012/b_012");
    auto need = [&](const char* k) -> const Json& {
        if (!j.contains(k)) fail(ErrorKind::Parse, where + ": missing '" + k + "'");
        return j[k];
    };
    try {
        if (phase)
            return LineParameters(json_matrix3c(need("z_abc"), where + ".z_abc"),
                                  json_matrix3r(need("b_abc"), where + ".b_abc"));
        if (seq_matrix)
            return line_from_sequence(json_matrix3c(need("z_012"), where + ".z_012"),
                                      json_matrix3c(need("b_012"), where + ".b_012"));
        const Complex z0 = json_complex(need("z0"), where + ".z0");
        const Complex z1 = json_complex(need("z1"), where + ".z1");
        const double b0 = json_number(need("b0"), where + ".b0");
        const double b1 = json_number(need("b1"), where + ".b1");
        if (j.contains("z2") && json_complex(j["z2"], where + ".z2") != z1)
            fail(ErrorKind::Parse, where + ": z2 must equal z1 for a transposed line");
        if (j.contains("b2") && json_number(j["b2"], where + ".b2") != b1)
            fail(ErrorKind::Parse, where + ": b2 must equal b1 for a transposed line");
        return transposed_line(z0, z1, b0, b1);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw;
        throw Error(ErrorKind::Parse, where + ": " + e.what());
    }
}

inline Json line_to_json(const LineParameters& line) {
    return Json{{"z_abc", matrix_to_json(line.z_abc())}, {"b_abc", matrix_to_json(line.b_abc())}};
}

inline LineParameters load_line_parameters(const std::string& path) {
    return line_from_json(parse_json(read_text_file(path), path), path);
}

} // namespace lineid::io
