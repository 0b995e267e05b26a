#pragma once

// CSV artifacts of one run. Keys and distances use %.6g, probabilities %#.6g,
// so identical runs give identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include "rbnoma/metrics.hpp"
#include "rbnoma/receiver.hpp"
#include "rbnoma/simulation.hpp"

namespace rbnoma {

namespace detail {

inline std::string fmt_g(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

inline std::string fmt_p(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%#.6g", x);
    return buf;
}

inline std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << header << '\n';
    return f;
}

inline void close_csv(std::ofstream& f, const std::filesystem::path& path) {
    f.close();
    if (!f) throw std::runtime_error("error while writing '" + path.string() + "'");
}

}  // namespace detail

inline void write_metrics_csv(const RunOutputs& out, const std::filesystem::path& dir) {
    using detail::fmt_g;
    using detail::fmt_p;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());

    {
        const auto path = dir / "cbr.csv";
        auto f = detail::open_csv(path, "window_start_ms,cbr");
        for (const auto& [t, c] : out.cbr_series) f << fmt_g(t) << ',' << fmt_p(c) << '\n';
        detail::close_csv(f, path);
    }
    {
        const auto path = dir / "prr_by_distance.csv";
        auto f = detail::open_csv(path, "bin_center_m,successes,attempts,prr");
        for (const auto& b : out.prr_by_distance) {
            if (b.attempts == 0) continue;
            f << fmt_g(b.center_m) << ',' << b.successes << ',' << b.attempts << ',' << fmt_p(b.prr()) << '\n';
        }
        detail::close_csv(f, path);
    }
    {
        const auto path = dir / "wbsp_ccdf.csv";
        auto f = detail::open_csv(path, "gap_ms,ccdf");
        for (const auto& [w, p] : out.wbsp_by_window) f << fmt_g(w) << ',' << fmt_p(p) << '\n';
        detail::close_csv(f, path);
    }
    {
        const auto path = dir / "eed_ccdf.csv";
        auto f = detail::open_csv(path, "eed_ms,ccdf");
        for (const auto& [x, p] : ccdf_on_grid(out.eed_samples, 0.1)) f << fmt_g(x) << ',' << fmt_p(p) << '\n';
        detail::close_csv(f, path);
    }
    {
        const auto path = dir / "range_summary.csv";
        auto f = detail::open_csv(path, "receiver_mode,traffic_mode,n_retx,density,range_m");
        if (out.density_veh_per_km > 0.0) {
            f << to_string(out.receiver_mode) << ',' << to_string(out.traffic_mode) << ',' << out.n_retx << ','
              << fmt_g(out.density_veh_per_km) << ',' << fmt_g(out.range_m) << '\n';
        }
        detail::close_csv(f, path);
    }
}

inline void write_trace_csv(const std::vector<TraceEvent>& trace, const std::filesystem::path& path) {
    auto f = detail::open_csv(path, "tti,event,tx,packet_id");
    for (const auto& e : trace) f << e.tti << ',' << to_string(e.event) << ',' << e.tx << ',' << e.packet_id << '\n';
    detail::close_csv(f, path);
}

}  // namespace rbnoma
