#pragma once

// Test helper: fabricate keypoint files whose sagittal-proxy angle equals a
// chosen trajectory. Shoulders sit 100 px apart with the neck midpoint at
// (500, 300), so theta = 100 * d_y / 100 = nose height above the neck.

#include <string>
#include <vector>

#include "epikin/calibration.hpp"

namespace testutil {

inline std::string pose_json_from_thetas(const std::vector<double>& thetas) {
    std::string out = "[";
    for (size_t i = 0; i < thetas.size(); ++i) {
        const double nose_y = 300.0 - thetas[i];
        std::string kp;
        for (int k = 0; k < 17; ++k) {
            double x = 500, y = 400;
            if (k == 0) {
                x = 500;
                y = nose_y;
            } else if (k == 5) {
                x = 450;
                y = 300;
            } else if (k == 6) {
                x = 550;
                y = 300;
            } else if (k == 11) {
                x = 480;
                y = 500;
            } else if (k == 12) {
                x = 520;
                y = 500;
            }
            kp += std::to_string(x) + "," + std::to_string(y) + ",0.9";
            if (k != 16) kp += ",";
        }
        out += "{\"image_id\":" + std::to_string(i) +
               ",\"idx\":0,\"score\":2.0,\"box\":[400,150,200,400],\"keypoints\":[" + kp + "]}";
        if (i + 1 < thetas.size()) out += ",";
    }
    out += "]";
    return out;
}

// Piecewise-constant-with-ramps theta trajectory on the 25 fps grid.
struct ThetaStep {
    double theta;
    double duration_s;
};

inline std::vector<double> thetas_from_steps(const std::vector<ThetaStep>& steps,
                                             double ramp_s = 0.4, double fps = 25) {
    std::vector<double> out;
    for (size_t i = 0; i < steps.size(); ++i) {
        if (i > 0) {
            const long n = static_cast<long>(ramp_s * fps);
            for (long k = 0; k < n; ++k)
                out.push_back(steps[i - 1].theta +
                              (steps[i].theta - steps[i - 1].theta) * (k + 1) /
                                  static_cast<double>(n + 1));
        }
        const long n = static_cast<long>(steps[i].duration_s * fps);
        for (long k = 0; k < n; ++k) out.push_back(steps[i].theta);
    }
    return out;
}

} // namespace testutil
