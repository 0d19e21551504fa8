#pragma once

// SNR -> spectral efficiency link adaptation over a versioned MCS table.
//
// Text format, one row per MCS, '#' starts a comment:
//   mcs_index modulation_order code_rate_x1024 spectral_efficiency required_snr_db
// Rows must be sorted by index with non-decreasing SE and required SNR.

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iabsim/util.hpp"

namespace iabsim {

struct McsEntry {
    int index = 0;
    int modulation_order = 0;
    double code_rate_x1024 = 0.0;
    double spectral_efficiency = 0.0;
    double required_snr_db = 0.0;
};

/// Byte-identical copy of data/mcs_table_v1.txt.
inline constexpr std::string_view kDefaultMcsTableText = R"MCS(# iabsim MCS table v1
# PDSCH MCS index table (256QAM), code rate x 1024
# required_snr_db = 10*log10(gap * (2^se - 1)), gap = 3 dB
# mcs_index modulation_order code_rate_x1024 spectral_efficiency required_snr_db
0 2 120 0.2344 -4.5346
1 2 193 0.3770 -2.2485
2 2 308 0.6016 0.1383
3 2 449 0.8770 2.2249
4 2 602 1.1758 4.0009
5 4 378 1.4766 5.5113
6 4 434 1.6953 6.4995
7 4 490 1.9141 7.4229
8 4 553 2.1602 8.4030
9 4 616 2.4063 9.3358
10 4 658 2.5703 9.9367
11 6 466 2.7305 10.5104
12 6 517 3.0293 11.5516
13 6 567 3.3223 12.5437
14 6 616 3.6094 13.4941
15 6 666 3.9023 14.4465
16 6 719 4.2129 15.4413
17 6 772 4.5234 16.4237
18 6 822 4.8164 17.3419
19 6 873 5.1152 18.2711
20 8 682.5 5.3320 18.9417
21 8 711 5.5547 19.6279
22 8 754 5.8906 20.6586
23 8 797 6.2266 21.6855
24 8 841 6.5703 22.7326
25 8 885 6.9141 23.7774
26 8 916.5 7.1602 24.5239
27 8 948 7.4063 25.2695
)MCS";

class McsTable {
public:
    static McsTable parse(std::string_view text) {
        McsTable t;
        t.hash_ = fnv1a64(text);
        for_each_line(text, [&](std::string_view line, std::size_t lineno) {
            if (auto c = line.find('#'); c != std::string_view::npos) line = line.substr(0, c);
            auto cols = split_ws(line);
            if (cols.empty()) return;
            if (cols.size() != 5) {
                throw std::runtime_error("MCS table line " + std::to_string(lineno) + ": expected 5 columns");
            }
            double v[5];
            for (int i = 0; i < 5; ++i) {
                if (!parse_double(cols[i], v[i])) {
                    throw std::runtime_error("MCS table line " + std::to_string(lineno) + ": bad number '" +
                                             std::string(cols[i]) + "'");
                }
            }
            t.rows_.push_back({static_cast<int>(v[0]), static_cast<int>(v[1]), v[2], v[3], v[4]});
        });
        if (t.rows_.empty()) throw std::runtime_error("MCS table is empty");
        for (std::size_t i = 0; i < t.rows_.size(); ++i) {
            const auto& r = t.rows_[i];
            if (r.index != static_cast<int>(i)) throw std::runtime_error("MCS table indices must be 0..n-1");
            if (r.spectral_efficiency <= 0.0) throw std::runtime_error("MCS spectral efficiency must be > 0");
            if (i > 0 && (r.spectral_efficiency < t.rows_[i - 1].spectral_efficiency ||
                          r.required_snr_db < t.rows_[i - 1].required_snr_db)) {
                throw std::runtime_error("MCS table must be monotone in SE and required SNR");
            }
        }
        return t;
    }

    static McsTable load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open MCS table " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    static const McsTable& builtin() {
        static const McsTable t = parse(kDefaultMcsTableText);
        return t;
    }

    /// Highest row whose required SNR is met, or nullptr below the lowest threshold.
    const McsEntry* select(double snr_db) const {
        auto it = std::upper_bound(rows_.begin(), rows_.end(), snr_db,
                                   [](double s, const McsEntry& e) { return s < e.required_snr_db; });
        return it == rows_.begin() ? nullptr : &*(it - 1);
    }

    /// bits/s/Hz; 0 below the lowest MCS, capped at the last row.
    double spectral_efficiency(double snr_db) const {
        const auto* e = select(snr_db);
        return e ? e->spectral_efficiency : 0.0;
    }

    double max_spectral_efficiency() const { return rows_.back().spectral_efficiency; }
    const std::vector<McsEntry>& rows() const { return rows_; }
    std::uint64_t hash() const { return hash_; }

private:
    std::vector<McsEntry> rows_;
    std::uint64_t hash_ = 0;
};

}  // namespace iabsim
