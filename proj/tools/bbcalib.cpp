// bbcalib: blackbox OST-HMD calibration toolkit CLI.
// Subcommands: simulate, calibrate, evaluate, stream.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "bbcalib/session_io.hpp"
#include "bbcalib/stream.hpp"

namespace {

using namespace bbcalib;

constexpr int kExitIo = 1;
constexpr int kExitFlags = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitNoGroundTruth = 4;
constexpr int kExitBind = 5;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("BBCALIB_SEED"))
        return std::strtoull(env, nullptr, 10);
    return 0;
}

GroundTruthPreset parse_preset(const std::string& s) {
    if (s == "rigid")
        return GroundTruthPreset::rigid;
    if (s == "scale")
        return GroundTruthPreset::rigid_scale;
    if (s == "shear")
        return GroundTruthPreset::rigid_shear;
    if (s == "perspective")
        return GroundTruthPreset::mild_perspective;
    throw CLI::ValidationError("--preset", "unknown preset " + s);
}

// Fixed chain constants for the world-anchored scenario: a non-trivial
// tracker placement in the room and a nominal head pose.
RigidTransform world_tracker_pose() {
    return {UnitQuaternion::from_axis_angle({1, 0, 0}, 0.3), Point3(100, -50, 400)};
}

RigidTransform nominal_head_pose() {
    return {UnitQuaternion::from_axis_angle({0, 1, 0}, 0.2), Point3(50, 30, -20)};
}

struct SimulateArgs {
    std::string scenario = "head";
    std::string preset = "rigid";
    std::uint64_t seed = default_seed();
    double sigma_xy = 0.0, sigma_z = 0.0;
    double outlier_prob = 0.0, outlier_mag = 0.0;
    double pose_sigma = 0.0;
    double drift_mm = 0.0, drift_mrad = 0.0;
    std::size_t n_train = 20, n_test = 8;
    std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
    GroundTruth gt;
    gt.transform = make_ground_truth_transform(parse_preset(a.preset), a.seed);
    gt.drift_sigma_mm = a.drift_mm;
    gt.drift_sigma_mrad = a.drift_mrad;

    NoiseModel nm;
    nm.sigma_xy = a.sigma_xy;
    nm.sigma_z = a.sigma_z;
    nm.outlier_probability = a.outlier_prob;
    nm.outlier_magnitude = a.outlier_mag;
    nm.multipoint_pose_sigma = a.pose_sigma;
    nm.seed = a.seed;

    WorkspaceFrustum ws;
    CalibrationSession session;
    if (a.scenario == "head") {
        session = generate_single_point_session(gt, ws, nm, a.n_train, a.n_test);
    } else if (a.scenario == "multipoint") {
        session = generate_multipoint_session(gt, ws, nm, 4, 50.8, a.n_test);
    } else if (a.scenario == "world") {
        gt.scenario = Scenario::world_anchored;
        // sample desired view-frame points, back-map to tracker-room points
        std::mt19937_64 rng(nm.seed);
        const auto view_pts = sample_frustum_points(ws, a.n_train + a.n_test, rng);
        const RigidTransform chain = invert_rigid(nominal_head_pose()) * world_tracker_pose();
        const RigidTransform chain_inv = invert_rigid(chain);
        std::vector<Point3> placements;
        placements.reserve(view_pts.size());
        for (const auto& v : view_pts)
            placements.push_back(chain_inv.apply(v));
        session.correspondences = simulate_world_anchored_chain(
            gt, nm, world_tracker_pose(), nominal_head_pose(), placements);
        for (std::size_t i = a.n_train; i < session.correspondences.size(); ++i)
            session.correspondences[i].phase = Phase::test;
        session.ground_truth = gt;
        session.workspace = ws;
        session.noise = nm;
    } else {
        std::cerr << "unknown scenario: " << a.scenario << "\n";
        return kExitFlags;
    }

    write_file_atomic(a.out, serialize_session(session));
    return 0;
}

struct CalibrateArgs {
    std::string in;
    std::string out_report;
    std::string transform_prefix;
    std::string model = "all";
    RansacConfig cfg;
};

int cmd_calibrate(const CalibrateArgs& a) {
    const CalibrationSession session = parse_session(read_file(a.in));
    const CalibrationReport report = run_calibrate_and_test(session, a.cfg);

    std::vector<ModelClass> wanted;
    if (a.model == "all")
        wanted.assign(kAllModels.begin(), kAllModels.end());
    else if (a.model == "isometric")
        wanted = {ModelClass::isometric};
    else if (a.model == "affine")
        wanted = {ModelClass::affine};
    else if (a.model == "perspective")
        wanted = {ModelClass::perspective};
    else {
        std::cerr << "unknown model: " << a.model << "\n";
        return kExitFlags;
    }

    // filtered report keeps only the requested models
    CalibrationReport filtered = report;
    for (ModelClass m : kAllModels)
        if (std::find(wanted.begin(), wanted.end(), m) == wanted.end())
            filtered.for_model(m).ok = false;
    std::string csv = kReportHeader;
    csv += '\n';
    {
        const std::string full = serialize_report(report);
        std::stringstream ss(full);
        std::string line;
        std::getline(ss, line); // header
        while (std::getline(ss, line))
            for (ModelClass m : wanted)
                if (line.rfind(to_string(m), 0) == 0)
                    csv += line + '\n';
    }
    if (!a.out_report.empty())
        write_file_atomic(a.out_report, csv);

    int rc = 0;
    for (ModelClass m : wanted) {
        const ModelReport& mr = report.for_model(m);
        if (!mr.ok) {
            std::cerr << "estimation failed for model " << to_string(m) << ": " << mr.error
                      << "\n";
            rc = kExitDegenerate;
            continue;
        }
        if (!a.transform_prefix.empty())
            write_file_atomic(a.transform_prefix + "_" + to_string(m) + ".txt",
                              serialize_transform(mr.transform.matrix));
    }
    std::cout << csv;
    return rc;
}

struct EvaluateArgs {
    std::string transform_path;
    std::string session_path;
    std::string mode = "test";
    std::string out;
    double offset_x = 150.0, offset_y = 0.0, offset_z = 0.0;
    double align_sigma_xy = 0.0, align_sigma_z = 0.0;
    std::uint64_t seed = default_seed();
};

int cmd_evaluate(const EvaluateArgs& a) {
    const CalibrationSession session = parse_session(read_file(a.session_path));
    Transform t;
    t.matrix = parse_transform(read_file(a.transform_path));
    t.model = infer_model_class(t.matrix);

    std::string csv;
    if (a.mode == "test") {
        const auto test = session.phase_points(Phase::test);
        if (test.empty())
            throw Error("evaluate: session has no test rows");
        const ErrorStats st = reprojection_error(t, test);
        csv = kReportHeader;
        csv += '\n';
        csv += std::string(to_string(t.model)) + ",test," + std::to_string(st.n);
        csv += ',' + detail::fmt3(st.mean) + ',' + detail::fmt3(st.std);
        for (int ax = 0; ax < 3; ++ax)
            csv += ',' + detail::fmt3(st.per_axis[ax].mean) + ',' +
                   detail::fmt3(st.per_axis[ax].std);
        csv += ",0\n";
    } else if (a.mode == "doublecube") {
        if (!session.ground_truth) {
            std::cerr << "doublecube evaluation requires a ground-truth block in the session "
                         "file\n";
            return kExitNoGroundTruth;
        }
        NoiseModel nm;
        nm.sigma_xy = a.align_sigma_xy;
        nm.sigma_z = a.align_sigma_z;
        nm.seed = a.seed;
        const DoubleCubeReport r =
            run_double_cube_match(t, *session.ground_truth, nm,
                                  Point3(a.offset_x, a.offset_y, a.offset_z), 4,
                                  session.workspace, session.cube_edge);
        csv = serialize_double_cube(r);
    } else {
        std::cerr << "unknown mode: " << a.mode << "\n";
        return kExitFlags;
    }

    if (!a.out.empty())
        write_file_atomic(a.out, csv);
    std::cout << csv;
    return 0;
}

struct StreamArgs {
    std::uint16_t port = 14514;
    double duration_s = 10.0;
    double cadence_hz = 30.0;
    std::uint32_t marker = 0;
    std::string replay;
    std::string out;
};

std::string fragment_row(int index, const TrackedPose& p) {
    std::string row = std::to_string(index) + ",train," + std::to_string(index) + ",0";
    for (int a = 0; a < 3; ++a)
        row += ',' + detail::fmt9(p.pose.translation(a));
    row += ",0,0,0\n";
    return row;
}

int cmd_stream(const StreamArgs& a) {
    std::string fragment = "version,1\n";
    fragment += kSessionHeader;
    fragment += '\n';
    int rows = 0;

    PoseStore store;
    double rate = 0.0;
    if (!a.replay.empty()) {
        // replay: walk the packet records, sampling at the cadence implied by
        // the packet timestamps
        const std::string data = read_file(a.replay);
        if (data.size() % kPacketSize != 0)
            std::cerr << "warning: trailing partial record ignored\n";
        const std::uint64_t cadence_us =
            static_cast<std::uint64_t>(1e6 / std::max(a.cadence_hz, 1e-6));
        std::uint64_t first_ts = 0, last_ts = 0, next_tick = 0;
        bool started = false;
        for (std::size_t off = 0; off + kPacketSize <= data.size(); off += kPacketSize) {
            TrackedPose p;
            try {
                p = decode_packet(reinterpret_cast<const std::uint8_t*>(data.data()) + off,
                                  kPacketSize);
            } catch (const Error&) {
                continue;
            }
            store.accept(p);
            if (!started) {
                first_ts = p.timestamp_us;
                next_tick = first_ts + cadence_us;
                started = true;
            }
            last_ts = std::max(last_ts, p.timestamp_us);
            while (p.timestamp_us >= next_tick) {
                if (auto latest = store.latest(a.marker))
                    fragment += fragment_row(rows++, latest->first);
                next_tick += cadence_us;
            }
        }
        const double span_s = started ? static_cast<double>(last_ts - first_ts) / 1e6 : 0.0;
        rate = span_s > 0.0 ? static_cast<double>(store.accepted_count()) / span_s : 0.0;
    } else {
        std::unique_ptr<UdpListener> listener;
        try {
            listener = std::make_unique<UdpListener>(store, a.port);
        } catch (const Error& e) {
            std::cerr << e.what() << "\n";
            return kExitBind;
        }
        const auto start = std::chrono::steady_clock::now();
        const auto end = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                     std::chrono::duration<double>(a.duration_s));
        const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / std::max(a.cadence_hz, 1e-6)));
        auto tick = start + period;
        while (std::chrono::steady_clock::now() < end) {
            std::this_thread::sleep_until(tick);
            tick += period;
            if (auto latest = store.latest(a.marker))
                fragment += fragment_row(rows++, latest->first);
        }
        listener->stop();
        rate = static_cast<double>(store.accepted_count()) / a.duration_s;
    }

    if (!a.out.empty())
        write_file_atomic(a.out, fragment);
    std::printf("rate_hz=%.1f accepted=%llu dropped=%llu rows=%d\n", rate,
                static_cast<unsigned long long>(store.accepted_count()),
                static_cast<unsigned long long>(store.dropped_count()), rows);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"blackbox OST-HMD calibration toolkit"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "generate a synthetic calibration session");
    s->add_option("--scenario", sim.scenario, "head | world | multipoint");
    s->add_option("--preset", sim.preset, "rigid | scale | shear | perspective");
    s->add_option("--seed", sim.seed, "RNG seed (default: BBCALIB_SEED or 0)");
    s->add_option("--noise-sigma-xy", sim.sigma_xy, "lateral noise sigma, mm");
    s->add_option("--noise-sigma-z", sim.sigma_z, "depth noise sigma, mm");
    s->add_option("--outlier-prob", sim.outlier_prob, "per-point outlier probability");
    s->add_option("--outlier-mag", sim.outlier_mag, "outlier displacement, mm");
    s->add_option("--pose-sigma", sim.pose_sigma, "multipoint shared pose sigma, mm");
    s->add_option("--drift-sigma-mm", sim.drift_mm, "world scenario head drift, mm");
    s->add_option("--drift-sigma-mrad", sim.drift_mrad, "world scenario head drift, mrad");
    s->add_option("--n-train", sim.n_train, "train samples (single-point)");
    s->add_option("--n-test", sim.n_test, "test samples");
    s->add_option("--out", sim.out, "output session file")->required();

    CalibrateArgs cal;
    cal.cfg.seed = default_seed();
    auto* c = app.add_subcommand("calibrate", "fit transforms from a session file");
    c->add_option("--in", cal.in, "input session file")->required();
    c->add_option("--out-report", cal.out_report, "report CSV path");
    c->add_option("--transform-prefix", cal.transform_prefix,
                  "write <prefix>_<model>.txt transform files");
    c->add_option("--model", cal.model, "all | isometric | affine | perspective");
    c->add_option("--ransac-threshold", cal.cfg.inlier_threshold, "inlier threshold, mm");
    c->add_option("--ransac-iterations", cal.cfg.max_iterations, "max iterations");
    c->add_option("--ransac-min-inlier-fraction", cal.cfg.min_inlier_fraction,
                  "minimum inlier fraction");
    c->add_option("--seed", cal.cfg.seed, "RANSAC seed");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "evaluate a stored transform");
    e->add_option("--transform", ev.transform_path, "transform file")->required();
    e->add_option("--session", ev.session_path, "session file")->required();
    e->add_option("--mode", ev.mode, "test | doublecube");
    e->add_option("--out", ev.out, "output CSV path");
    e->add_option("--offset-x", ev.offset_x, "double-cube offset x, mm");
    e->add_option("--offset-y", ev.offset_y, "double-cube offset y, mm");
    e->add_option("--offset-z", ev.offset_z, "double-cube offset z, mm");
    e->add_option("--align-sigma-xy", ev.align_sigma_xy, "alignment noise, mm");
    e->add_option("--align-sigma-z", ev.align_sigma_z, "alignment depth noise, mm");
    e->add_option("--seed", ev.seed, "alignment noise seed");

    StreamArgs st;
    auto* t = app.add_subcommand("stream", "record poses from the UDP bridge");
    t->add_option("--port", st.port, "UDP port");
    t->add_option("--duration", st.duration_s, "listen duration, seconds");
    t->add_option("--cadence-hz", st.cadence_hz, "sampling cadence");
    t->add_option("--marker", st.marker, "marker id to record");
    t->add_option("--replay", st.replay, "replay packets from file instead of listening");
    t->add_option("--out", st.out, "output session fragment path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? 0 : kExitFlags;
    }

    try {
        if (s->parsed())
            return cmd_simulate(sim);
        if (c->parsed())
            return cmd_calibrate(cal);
        if (e->parsed())
            return cmd_evaluate(ev);
        if (t->parsed())
            return cmd_stream(st);
    } catch (const DegenerateConfiguration& err) {
        std::cerr << err.what() << "\n";
        return kExitDegenerate;
    } catch (const Error& err) {
        std::cerr << err.what() << "\n";
        return kExitIo;
    } catch (const std::exception& err) {
        std::cerr << err.what() << "\n";
        return kExitIo;
    }
    return kExitFlags;
}
