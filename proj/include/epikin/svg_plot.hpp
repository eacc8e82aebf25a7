#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "epikin/calibration.hpp"
#include "epikin/errors.hpp"
#include "epikin/format.hpp"
#include "epikin/markers.hpp"

namespace epikin {

/// Two stacked line charts: normalized position over notch gridlines with the
/// neutral band shaded, and raw velocity with guide lines at the speed-band
/// cutoffs. Marker intervals appear as translucent boxes. Output bytes depend
/// only on the inputs.
inline std::string render_plot_svg(const NormalizedSeries& norm, const VelocitySeries& vel,
                                   const std::vector<MarkerEvent>& events,
                                   const DetectorConfig& cfg) {
    if (norm.samples.empty() || vel.samples.empty()) throw ArgumentError("cannot plot an empty series");

    const double width = 900, chart_h = 240, gap = 50, margin_l = 60, margin_r = 20, margin_t = 30;
    const double height = margin_t + chart_h * 2 + gap + 40;

    const double t0 = norm.samples.front().t_s;
    const double t1 = std::max(norm.samples.back().t_s, vel.samples.back().t_s);
    const double tspan = std::max(1e-9, t1 - t0);
    auto x_of = [&](double t) { return margin_l + (t - t0) / tspan * (width - margin_l - margin_r); };

    double vmax = std::max(cfg.speed_high * 1.25, 1.0);
    for (const auto& s : vel.samples) vmax = std::max(vmax, std::abs(s.v_deg_s) * 1.05);

    const double pos_top = margin_t, vel_top = margin_t + chart_h + gap;
    auto y_pos = [&](double p) { return pos_top + (1.0 - p) / 2.0 * chart_h; };
    auto y_vel = [&](double v) { return vel_top + (vmax - v) / (2 * vmax) * chart_h; };

    auto num = [](double v) { return detail::fixed(v, 2); };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
           num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
    svg += "<rect width=\"" + num(width) + "\" height=\"" + num(height) + "\" fill=\"white\"/>\n";

    // Marker boxes behind both charts.
    for (const auto& e : events) {
        const char* color = e.kind == MarkerKind::HOLD
                                ? "#d9822b"
                                : (e.kind == MarkerKind::NOD_BURST ? "#3b7dd8" : "#7d3bd8");
        const char* cls = e.kind == MarkerKind::HOLD
                              ? "marker-hold"
                              : (e.kind == MarkerKind::NOD_BURST ? "marker-nod" : "marker-speed");
        if (e.kind == MarkerKind::SPEED_BAND && e.band == SpeedBandClass::MID) continue;
        const double x1 = x_of(std::max(t0, e.start_s)), x2 = x_of(std::min(t1, e.end_s));
        if (!(x2 > x1)) continue;
        svg += "<rect class=\"" + std::string(cls) + "\" x=\"" + num(x1) + "\" y=\"" + num(pos_top) +
               "\" width=\"" + num(x2 - x1) + "\" height=\"" + num(chart_h * 2 + gap) + "\" fill=\"" +
               color + "\" fill-opacity=\"0.15\"/>\n";
    }

    // Position chart scaffolding: neutral band plus notch gridlines.
    svg += "<rect class=\"neutral-band\" x=\"" + num(margin_l) + "\" y=\"" + num(y_pos(0.125)) +
           "\" width=\"" + num(width - margin_l - margin_r) + "\" height=\"" +
           num(y_pos(-0.125) - y_pos(0.125)) + "\" fill=\"#c8e6c9\" fill-opacity=\"0.5\"/>\n";
    for (double b : {-0.875, -0.625, -0.375, -0.125, 0.125, 0.375, 0.625, 0.875}) {
        svg += "<line class=\"notch-grid\" x1=\"" + num(margin_l) + "\" y1=\"" + num(y_pos(b)) +
               "\" x2=\"" + num(width - margin_r) + "\" y2=\"" + num(y_pos(b)) +
               "\" stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n";
    }
    for (double b : {-1.0, 0.0, 1.0}) {
        svg += "<line x1=\"" + num(margin_l) + "\" y1=\"" + num(y_pos(b)) + "\" x2=\"" +
               num(width - margin_r) + "\" y2=\"" + num(y_pos(b)) +
               "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    }

    auto polyline = [&](const std::string& cls, const std::string& stroke, auto&& points) {
        std::string s = "<polyline class=\"" + cls + "\" fill=\"none\" stroke=\"" + stroke +
                        "\" stroke-width=\"1.2\" points=\"";
        s += points();
        s += "\"/>\n";
        return s;
    };
    svg += polyline("position-curve", "#1a1a1a", [&] {
        std::string pts;
        for (const auto& s : norm.samples)
            pts += num(x_of(s.t_s)) + "," + num(y_pos(s.p)) + " ";
        return pts;
    });

    // Velocity chart: zero line plus the high/low guide lines on both sides.
    svg += "<line x1=\"" + num(margin_l) + "\" y1=\"" + num(y_vel(0)) + "\" x2=\"" +
           num(width - margin_r) + "\" y2=\"" + num(y_vel(0)) +
           "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    for (double g : {cfg.speed_high, -cfg.speed_high}) {
        svg += "<line class=\"guide-high\" x1=\"" + num(margin_l) + "\" y1=\"" + num(y_vel(g)) +
               "\" x2=\"" + num(width - margin_r) + "\" y2=\"" + num(y_vel(g)) +
               "\" stroke=\"#d84b3b\" stroke-width=\"0.8\" stroke-dasharray=\"6 3\"/>\n";
    }
    for (double g : {cfg.speed_low, -cfg.speed_low}) {
        svg += "<line class=\"guide-low\" x1=\"" + num(margin_l) + "\" y1=\"" + num(y_vel(g)) +
               "\" x2=\"" + num(width - margin_r) + "\" y2=\"" + num(y_vel(g)) +
               "\" stroke=\"#3b8dd8\" stroke-width=\"0.8\" stroke-dasharray=\"6 3\"/>\n";
    }
    svg += polyline("velocity-curve", "#1a1a1a", [&] {
        std::string pts;
        for (const auto& s : vel.samples)
            pts += num(x_of(s.t_s)) + "," + num(y_vel(s.v_deg_s)) + " ";
        return pts;
    });

    // Axis labels.
    svg += "<text x=\"" + num(margin_l) + "\" y=\"" + num(pos_top - 10) +
           "\" font-family=\"sans-serif\" font-size=\"12\">position (normalized, +1 = flexion "
           "limit)</text>\n";
    svg += "<text x=\"" + num(margin_l) + "\" y=\"" + num(vel_top - 10) +
           "\" font-family=\"sans-serif\" font-size=\"12\">velocity (deg/s, guides at " +
           detail::fixed(cfg.speed_high, 0) + " and " + detail::fixed(cfg.speed_low, 0) +
           ")</text>\n";
    svg += "<text x=\"" + num(margin_l) + "\" y=\"" + num(height - 12) +
           "\" font-family=\"sans-serif\" font-size=\"12\">time from " + num(t0) + " s to " +
           num(t1) + " s</text>\n";
    svg += "</svg>\n";
    return svg;
}

} // namespace epikin
