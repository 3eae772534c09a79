#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pipeline.hpp"

namespace bbcalib {

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    return out;
}

inline double parse_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == 0)
        throw Error("parse error: not a number: " + s);
    return v;
}

inline std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt3(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

} // namespace detail

inline constexpr const char* kSessionHeader =
    "index,phase,pose_id,corner_id,qx,qy,qz,px,py,pz";

/// SessionFile: `version,1` line, CSV header, one row per correspondence
/// (coordinates at 9 significant digits), then an optional `gt,`-prefixed
/// row of 16 row-major matrix entries.
inline std::string serialize_session(const CalibrationSession& s) {
    std::string out = "version,1\n";
    out += kSessionHeader;
    out += '\n';
    int index = 0;
    for (const auto& c : s.correspondences) {
        out += std::to_string(index++);
        out += ',';
        out += to_string(c.phase);
        out += ',' + std::to_string(c.pose_id) + ',' + std::to_string(c.corner_id);
        for (int a = 0; a < 3; ++a)
            out += ',' + detail::fmt9(c.q(a));
        for (int a = 0; a < 3; ++a)
            out += ',' + detail::fmt9(c.p(a));
        out += '\n';
    }
    if (s.ground_truth) {
        out += "gt";
        const auto& m = s.ground_truth->transform.matrix;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                out += ',' + detail::fmt17(m(r, c));
        out += '\n';
    }
    return out;
}

inline ModelClass infer_model_class(const HomogeneousMatrix& m) {
    if (std::abs(m(3, 0)) > 1e-12 || std::abs(m(3, 1)) > 1e-12 ||
        std::abs(m(3, 2)) > 1e-12 || std::abs(m(3, 3) - 1.0) > 1e-12)
        return ModelClass::perspective;
    const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
    if ((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-9 &&
        std::abs(r.determinant() - 1.0) < 1e-9)
        return ModelClass::isometric;
    return ModelClass::affine;
}

inline CalibrationSession parse_session(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line) || line != "version,1")
        throw Error("SessionFile: missing or unsupported version header");
    if (!std::getline(ss, line) || line != kSessionHeader)
        throw Error("SessionFile: bad column header");

    CalibrationSession s;
    while (std::getline(ss, line)) {
        if (line.empty())
            continue;
        const auto f = detail::split_csv(line);
        if (f[0] == "gt") {
            if (f.size() != 17)
                throw Error("SessionFile: gt row needs 16 matrix entries");
            GroundTruth gt;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    gt.transform.matrix(r, c) = detail::parse_double(f[1 + 4 * r + c]);
            gt.transform.model = infer_model_class(gt.transform.matrix);
            s.ground_truth = gt;
            continue;
        }
        if (f.size() != 10)
            throw Error("SessionFile: row needs 10 fields: " + line);
        PointCorrespondence c;
        if (f[1] == "train")
            c.phase = Phase::train;
        else if (f[1] == "test")
            c.phase = Phase::test;
        else
            throw Error("SessionFile: unknown phase " + f[1]);
        c.pose_id = static_cast<int>(detail::parse_double(f[2]));
        c.corner_id = static_cast<int>(detail::parse_double(f[3]));
        for (int a = 0; a < 3; ++a)
            c.q(a) = detail::parse_double(f[4 + a]);
        for (int a = 0; a < 3; ++a)
            c.p(a) = detail::parse_double(f[7 + a]);
        s.correspondences.push_back(c);
    }
    return s;
}

inline constexpr const char* kReportHeader =
    "model,phase,n,mean_mm,std_mm,x_mean,x_std,y_mean,y_std,z_mean,z_std,inliers";

/// ReportFile: one CSV row per (model, phase), mirroring the per-axis error
/// table layout. Failed models are reported with an error row.
inline std::string serialize_report(const CalibrationReport& report) {
    std::string out = kReportHeader;
    out += '\n';
    for (ModelClass model : kAllModels) {
        const ModelReport& mr = report.for_model(model);
        if (!mr.ok) {
            out += std::string(to_string(model)) + ",failed,0,,,,,,,,," + "\n";
            continue;
        }
        for (int phase = 0; phase < 2; ++phase) {
            const ErrorStats& st = phase == 0 ? mr.train : mr.test;
            out += to_string(model);
            out += phase == 0 ? ",train," : ",test,";
            out += std::to_string(st.n);
            out += ',' + detail::fmt3(st.mean) + ',' + detail::fmt3(st.std);
            for (int a = 0; a < 3; ++a)
                out += ',' + detail::fmt3(st.per_axis[a].mean) + ',' +
                       detail::fmt3(st.per_axis[a].std);
            out += ',' + std::to_string(mr.inlier_count);
            out += '\n';
        }
    }
    return out;
}

/// Double-cube CSV: per-placement rows then a summary row with the mean
/// displacement and the quaternion average of the rotation errors.
inline std::string serialize_double_cube(const DoubleCubeReport& r) {
    std::string out = "placement,disp_mm,qw,qx,qy,qz\n";
    for (std::size_t i = 0; i < r.placements.size(); ++i) {
        const auto& e = r.placements[i];
        out += std::to_string(i) + ',' + detail::fmt3(e.displacement);
        out += ',' + detail::fmt3(e.rotation.w()) + ',' + detail::fmt3(e.rotation.x()) +
               ',' + detail::fmt3(e.rotation.y()) + ',' + detail::fmt3(e.rotation.z());
        out += '\n';
    }
    out += "summary," + detail::fmt3(r.mean_displacement);
    out += ',' + detail::fmt3(r.average_rotation.w()) + ',' +
           detail::fmt3(r.average_rotation.x()) + ',' +
           detail::fmt3(r.average_rotation.y()) + ',' +
           detail::fmt3(r.average_rotation.z());
    out += '\n';
    return out;
}

/// Transform file: 16 row-major entries at 17 significant digits
/// (exact double round trip), 4 per line.
inline std::string serialize_transform(const HomogeneousMatrix& m) {
    std::string out;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            out += detail::fmt17(m(r, c));
            out += c == 3 ? '\n' : ' ';
        }
    }
    return out;
}

inline HomogeneousMatrix parse_transform(const std::string& text) {
    std::stringstream ss(text);
    HomogeneousMatrix m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (!(ss >> m(r, c)))
                throw Error("transform file: expected 16 numeric entries");
    return m;
}

/// Writes via a temp file and renames on success, so failures never leave a
/// partial output behind.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot open for writing: " + tmp);
        out << content;
        if (!out)
            throw Error("write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("rename failed for " + path + ": " + ec.message());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace bbcalib
