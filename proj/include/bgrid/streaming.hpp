#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bgrid/common.hpp"
#include "bgrid/grid.hpp"
#include "bgrid/image.hpp"
#include "bgrid/params.hpp"

namespace bgrid {

// ---------------------------------------------------------------------------
// Lookup tables driving the fused loop: L1 maps an intensity to its rounded
// grid z index, L2/L3 map block-relative row/column phases to interpolation
// fractions. The defining contract is that the fused engine consumes exactly
// the coordinates the three-pass slice computes.

struct Luts {
    std::array<int, 256> l1{};
    std::vector<double> l2;  // output-row phase -> x fraction
    std::vector<double> l3;  // column phase -> y fraction
};

inline Luts build_luts(const DenoiseParams& p) {
    p.validate();
    Luts t;
    const double zs = p.zscale();
    for (int l = 0; l < 256; ++l) t.l1[std::size_t(l)] = round_half_up(double(l) / zs);
    t.l2.resize(std::size_t(p.radius));
    t.l3.resize(std::size_t(p.radius));
    for (int k = 0; k < p.radius; ++k)
        t.l2[std::size_t(k)] = t.l3[std::size_t(k)] = double(k) / double(p.radius);
    return t;
}

// Whether one grid plane's blur fits in the cycle budget between its trigger
// and the first interpolation read, i.e. whether the fused loop can run
// without suspending the input.
inline bool stall_condition_holds(const DenoiseParams& p, int width) {
    p.validate();
    long gy = long(width / p.radius) + 2;
    long gz = long(z_bins(p.zscale())) + 2;
    long rhs = 2L * width - ceil_half(p.radius) - p.radius - (width % p.radius);
    return gy * gz < rhs;
}

// ---------------------------------------------------------------------------
// Packed z-columns: one grid column holds all gz cells as a bit string,
// (count, sum) pairs from z = gz-1 down to z = 0, widths from cell_bit_widths.

struct PackedColumn {
    std::vector<std::uint64_t> words;
};

namespace detail {

struct BitWriter {
    std::vector<std::uint64_t>& words;
    std::size_t pos = 0;

    void append(std::uint64_t v, int n) {
        if (n == 0) return;
        if (n < 64) v &= (1ull << n) - 1;
        int off = int(pos & 63);
        std::size_t wi = pos >> 6;
        if (off + n <= 64) {
            words[wi] |= v << (64 - off - n);
        } else {
            int hi = 64 - off;
            words[wi] |= v >> (n - hi);
            words[wi + 1] |= v << (64 - (n - hi));
        }
        pos += std::size_t(n);
    }
};

inline std::uint64_t bits_at(const std::vector<std::uint64_t>& words, std::size_t pos, int n) {
    if (n == 0) return 0;
    int off = int(pos & 63);
    std::size_t wi = pos >> 6;
    std::uint64_t v;
    if (off + n <= 64) {
        v = words[wi] >> (64 - off - n);
    } else {
        int hi = 64 - off;
        v = (words[wi] << (n - hi)) | (words[wi + 1] >> (64 - (n - hi)));
    }
    if (n < 64) v &= (1ull << n) - 1;
    return v;
}

}  // namespace detail

inline PackedColumn pack_column(const std::vector<GridCell>& cells, CellWidths wd) {
    std::size_t total = cells.size() * std::size_t(wd.count_bits + wd.sum_bits);
    PackedColumn col;
    col.words.assign((total + 63) / 64, 0);
    detail::BitWriter bw{col.words};
    for (std::size_t i = cells.size(); i-- > 0;) {
        bw.append(std::uint64_t(cells[i].count), wd.count_bits);
        bw.append(std::uint64_t(cells[i].sum), wd.sum_bits);
    }
    return col;
}

inline void unpack_column(const PackedColumn& col, CellWidths wd, std::vector<GridCell>& out) {
    std::size_t pos = 0;
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i].count = std::int64_t(detail::bits_at(col.words, pos, wd.count_bits));
        pos += std::size_t(wd.count_bits);
        out[i].sum = std::int64_t(detail::bits_at(col.words, pos, wd.sum_bits));
        pos += std::size_t(wd.sum_bits);
    }
}

// Bit image of a packed column, MSB first; for inspection and tests.
inline std::vector<int> column_bits(const PackedColumn& col, CellWidths wd, int gz) {
    std::size_t total = std::size_t(gz) * std::size_t(wd.count_bits + wd.sum_bits);
    std::vector<int> bits(total);
    for (std::size_t i = 0; i < total; ++i)
        bits[i] = int(detail::bits_at(col.words, i, 1));
    return bits;
}

// ---------------------------------------------------------------------------
// Pipeline state and reporting

struct PipelineState {
    int cx = 0, py = 0, cy = 0;
    int cnt_y = 0, cnt_z = 0;
    std::vector<GridCell> grid_z;                        // z-column register row
    std::vector<std::int64_t> reg_gf_cnt, reg_gf_sum;    // 3 planes x 3 cols x gz
    std::vector<GfCell> reg_ti;                          // 2 planes x 2 cols x gz
    std::vector<std::uint8_t> lb;                        // FIFO ring storage
    std::size_t lb_head = 0, lb_count = 0;
    Luts luts;
    long cycle = 0;
    long stalls = 0;
};

// Alg-style counter update, applied once per non-stall cycle after the pixel
// at column y is processed. The first gg block is short, so the phase starts
// at floor(r/2); cx keeps the source's end-of-row case split (it may
// transiently equal r) and is reported, not consumed.
inline void advance_counters_core(int& cx, int& py, int& cy, int y, int width, int radius) {
    const int reset = radius / 2;
    if (y == width - 1) {
        cx = (cx == radius - 1) ? cx + 1 : 0;
        py = 0;
        cy = reset;
    } else if (cy == radius - 1) {
        py += 1;
        cy = 0;
    } else {
        cy += 1;
    }
}

inline PipelineState advance_counters(PipelineState st, int width, const DenoiseParams& p) {
    int y = int((st.cycle - st.stalls) % width);
    advance_counters_core(st.cx, st.py, st.cy, y, width, p.radius);
    st.cycle += 1;
    return st;
}

struct PartitionStat {
    std::string name;
    int max_accesses = 0;
};

struct AccessViolation {
    long cycle = 0;
    std::string partition;
    int accesses = 0;
};

struct CycleReport {
    long total_cycles = 0;
    long stall_cycles = 0;
    long lb_peak = 0;
    long live_cells = 0;  // 3*gy*gz grid + 2*gy*gz blurred + lb peak
    int max_ops_per_cycle = 0;
    bool fallback = false;
    GridDims dims;
    std::vector<PartitionStat> partitions;
    std::vector<AccessViolation> violations;

    double predicted_fps(double f_clk) const {
        return total_cycles > 0 ? f_clk / double(total_cycles) : 0.0;
    }
};

struct AuditResult {
    bool passed = false;
    std::vector<AccessViolation> offenders;
};

// Dual-port model: at most two accesses per partition per cycle, and the line
// buffer sees at most one enqueue plus one dequeue.
inline AuditResult audit_memory_accesses(const CycleReport& rep) {
    AuditResult res;
    res.offenders = rep.violations;
    for (const auto& ps : rep.partitions)
        if (ps.max_accesses > 2 && res.offenders.empty())
            res.offenders.push_back({-1, ps.name, ps.max_accesses});
    res.passed = res.offenders.empty();
    return res;
}

struct StreamOptions {
    TiWeights ti_weights = TiWeights::standard;
    int grid_partitions = 3;  // accounting granularity; 3 is the hardware layout
    int gf_partitions = 2;
    int max_recorded_violations = 16;
};

// ---------------------------------------------------------------------------
// Fused streaming engine

namespace detail {

class StreamingSim {
public:
    StreamingSim(const Image& img, const DenoiseParams& p, const std::optional<ShiftKernel>& mode,
                 const StreamOptions& opt)
        : img_(img), opt_(opt), wt_(gf_weights(p, mode)) {
        w_ = img.width;
        h_ = img.height;
        r_ = p.radius;
        ch_ = ceil_half(r_);
        lag_ = 2 * r_ + ch_;
        total_rows_ = h_ + 2 * r_ + ch_;
        dims_ = grid_dimensions(p, w_, h_);
        zscale_ = p.zscale();
        widths_ = cell_bit_widths(r_);
        c1_ = r_ + ch_ - 1;
        bx_last_ = row_block(h_ - 1);
        by_last_ = col_block(w_ - 1);

        for (int i = 0; i < 3; ++i) {
            grid_cols_[i].assign(std::size_t(dims_.gy), {});
            grid_owner_[i].assign(std::size_t(dims_.gy), -1);
            grid_complete_[i].assign(std::size_t(dims_.gy), 0);
            grid_store_[i].assign(std::size_t(dims_.gy), -1);
        }
        for (int i = 0; i < 2; ++i) {
            gf_cells_[i].assign(std::size_t(dims_.gy) * dims_.gz, {});
            gf_owner_[i].assign(std::size_t(dims_.gy), -1);
            gf_store_[i].assign(std::size_t(dims_.gy), -1);
        }

        st_.luts = build_luts(p);
        st_.cx = st_.cy = r_ / 2;
        st_.py = 0;
        st_.grid_z.assign(std::size_t(dims_.gz), {});
        st_.reg_gf_cnt.assign(std::size_t(9) * dims_.gz, 0);
        st_.reg_gf_sum.assign(std::size_t(9) * dims_.gz, 0);
        st_.reg_ti.assign(std::size_t(4) * dims_.gz, {});
        lb_cap_ = std::size_t(lag_ + 1) * std::size_t(w_) + 8;
        st_.lb.assign(lb_cap_, 0);

        unpack_buf_.assign(std::size_t(dims_.gz), {});
        gf_colbuf_.assign(std::size_t(dims_.gz), {});
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) ti_meta_[i][j] = {};
        out_ = Image(w_, h_);
    }

    Image run(CycleReport& rep) {
        for (int x = 0; x < total_rows_; ++x) {
            row_blk_ = row_block(x);
            row_first_ = (x == 0) || row_block(x - 1) != row_blk_;
            // The partial last block completes with the last input row.
            row_last_ = (x == h_ - 1) || row_block(x + 1) != row_blk_;
            if (x >= lag_) {
                ox_ = x - lag_;
                oxc_ = axis_coord(ox_, r_);
                ti_axis_pair(st_.luts.l2[std::size_t(ox_ % r_)], opt_.ti_weights, fx_);
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) ti_meta_[i][j] = {};
            }
            for (int y = 0; y < w_; ++y) {
                cur_x_ = x;
                cur_y_ = y;
                if (x >= lag_) resolve_ti_stalls(y);
                normal_cycle(x, y);
            }
        }
        if (st_.lb_count != 0) throw std::logic_error("line buffer not drained at end of run");

        rep.total_cycles = st_.cycle;
        rep.stall_cycles = st_.stalls;
        rep.lb_peak = long(lb_peak_);
        rep.dims = dims_;
        rep.live_cells = 5L * dims_.gy * dims_.gz + rep.lb_peak;
        rep.max_ops_per_cycle = max_ops_;
        rep.fallback = false;
        rep.partitions.clear();
        for (int i = 0; i < opt_.grid_partitions; ++i)
            rep.partitions.push_back({"grid" + std::to_string(i), max_acct_grid_[std::size_t(i)]});
        for (int i = 0; i < opt_.gf_partitions; ++i)
            rep.partitions.push_back({"gf" + std::to_string(i), max_acct_gf_[std::size_t(i)]});
        rep.partitions.push_back({"lb", max_lb_});
        rep.violations = violations_;
        return std::move(out_);
    }

    const PipelineState& state() const { return st_; }

private:
    // ---- geometry helpers (round-half-up blocks, integer form)
    int row_block(int x) const { return (2 * x + r_) / (2 * r_); }
    int col_block(int y) const { return (2 * y + r_) / (2 * r_); }

    // ---- cycle bookkeeping
    void begin_cycle() {
        std::memset(acc_grid_, 0, sizeof acc_grid_);
        std::memset(acc_gf_, 0, sizeof acc_gf_);
        std::memset(acct_grid_, 0, sizeof acct_grid_);
        std::memset(acct_gf_, 0, sizeof acct_gf_);
        lb_enq_ = lb_deq_ = 0;
        ops_ = 0;
    }

    void end_cycle(bool stall) {
        for (int i = 0; i < opt_.grid_partitions; ++i) {
            max_acct_grid_[std::size_t(i)] = std::max(max_acct_grid_[std::size_t(i)], acct_grid_[i]);
            if (acct_grid_[i] > 2) record_violation("grid" + std::to_string(i), acct_grid_[i]);
        }
        for (int i = 0; i < opt_.gf_partitions; ++i) {
            max_acct_gf_[std::size_t(i)] = std::max(max_acct_gf_[std::size_t(i)], acct_gf_[i]);
            if (acct_gf_[i] > 2) record_violation("gf" + std::to_string(i), acct_gf_[i]);
        }
        max_lb_ = std::max(max_lb_, lb_enq_ + lb_deq_);
        if (lb_enq_ > 1 || lb_deq_ > 1) record_violation("lb", lb_enq_ + lb_deq_);
        max_ops_ = std::max(max_ops_, ops_);
        st_.cycle += 1;
        if (stall) st_.stalls += 1;
    }

    void record_violation(const std::string& name, int n) {
        if (int(violations_.size()) < opt_.max_recorded_violations)
            violations_.push_back({st_.cycle, name, n});
    }

    void touch_grid(int plane) {
        acc_grid_[plane % 3] += 1;
        acct_grid_[plane % opt_.grid_partitions] += 1;
    }
    void touch_gf(int plane) {
        acc_gf_[plane % 2] += 1;
        acct_gf_[plane % opt_.gf_partitions] += 1;
    }

    // ---- line buffer (FIFO ring)
    void lb_push(std::uint8_t v) {
        st_.lb[(st_.lb_head + st_.lb_count) % lb_cap_] = v;
        st_.lb_count += 1;
        lb_peak_ = std::max(lb_peak_, st_.lb_count);
        lb_enq_ += 1;
    }
    std::uint8_t lb_pop() {
        if (st_.lb_count == 0) throw std::logic_error("line buffer underflow");
        std::uint8_t v = st_.lb[st_.lb_head];
        st_.lb_head = (st_.lb_head + 1) % lb_cap_;
        st_.lb_count -= 1;
        lb_deq_ += 1;
        return v;
    }

    // ---- grid storage
    bool grid_occupied(int plane, int col) const {
        return plane >= 0 && plane <= bx_last_ && col >= 0 && col <= by_last_;
    }

    // A grid column is readable once its final store has landed in an earlier
    // cycle. Unoccupied lattice regions read as zero without a memory access.
    bool grid_readable(int plane, int col) const {
        if (!grid_occupied(plane, col)) return true;
        int part = plane % 3;
        int owner = grid_owner_[std::size_t(part)][std::size_t(col)];
        if (owner > plane)
            throw std::logic_error("cycle " + std::to_string(st_.cycle) + ": grid" +
                                   std::to_string(part) + " column " + std::to_string(col) +
                                   " overwritten before the blur consumed plane " +
                                   std::to_string(plane));
        return owner == plane && grid_complete_[std::size_t(part)][std::size_t(col)] &&
               grid_store_[std::size_t(part)][std::size_t(col)] < st_.cycle;
    }

    // Reads one z-column triple (planes q-1..q+1) of column `col` into the
    // reg window slot. Counts one access per partition actually read.
    void read_grid_triple(int q, int col, int cslot) {
        for (int dp = 0; dp < 3; ++dp) {
            int plane = q - 1 + dp;
            std::int64_t* cdst = &st_.reg_gf_cnt[(std::size_t(dp) * 3 + std::size_t(cslot)) *
                                                 std::size_t(dims_.gz)];
            std::int64_t* sdst = &st_.reg_gf_sum[(std::size_t(dp) * 3 + std::size_t(cslot)) *
                                                 std::size_t(dims_.gz)];
            if (!grid_occupied(plane, col)) {
                std::memset(cdst, 0, sizeof(std::int64_t) * std::size_t(dims_.gz));
                std::memset(sdst, 0, sizeof(std::int64_t) * std::size_t(dims_.gz));
                continue;
            }
            touch_grid(plane);
            unpack_column(grid_cols_[std::size_t(plane % 3)][std::size_t(col)], widths_,
                          unpack_buf_);
            for (int z = 0; z < dims_.gz; ++z) {
                cdst[z] = unpack_buf_[std::size_t(z)].count;
                sdst[z] = unpack_buf_[std::size_t(z)].sum;
            }
        }
    }

    bool triple_readable(int q, int col) const {
        for (int dp = 0; dp < 3; ++dp)
            if (!grid_readable(q - 1 + dp, col)) return false;
        return true;
    }

    // Physical arbitration: the blur defers its reads if a partition would
    // exceed two accesses this cycle.
    bool triple_fits(int q, int col) const {
        for (int dp = 0; dp < 3; ++dp) {
            int plane = q - 1 + dp;
            if (grid_occupied(plane, col) && acc_grid_[plane % 3] >= 2) return false;
        }
        return true;
    }

    void rotate_reg_gf() {
        const std::size_t gz = std::size_t(dims_.gz);
        for (int dp = 0; dp < 3; ++dp) {
            std::int64_t* c = &st_.reg_gf_cnt[std::size_t(dp) * 3 * gz];
            std::int64_t* s = &st_.reg_gf_sum[std::size_t(dp) * 3 * gz];
            std::memmove(c, c + gz, sizeof(std::int64_t) * gz * 2);
            std::memmove(s, s + gz, sizeof(std::int64_t) * gz * 2);
        }
    }

    void zero_reg_slot(int cslot) {
        const std::size_t gz = std::size_t(dims_.gz);
        for (int dp = 0; dp < 3; ++dp) {
            std::memset(&st_.reg_gf_cnt[(std::size_t(dp) * 3 + std::size_t(cslot)) * gz], 0,
                        sizeof(std::int64_t) * gz);
            std::memset(&st_.reg_gf_sum[(std::size_t(dp) * 3 + std::size_t(cslot)) * gz], 0,
                        sizeof(std::int64_t) * gz);
        }
    }

    // ---- GF unit: one step per cycle
    enum class GfPhase { idle, regload, run, wait_shift };

    // Cycle within an output row at which the interpolation loads `col`.
    // Under the standard convention a block start needs only the lower
    // column, so the upper one loads a cycle later; paper-literal weights put
    // the vertex-hit weight on the far corner, which inverts that deferral.
    int ti_load_in_row(int col) const {
        if (opt_.ti_weights == TiWeights::standard) {
            if (r_ == 1) return col;
            if (col <= 1) return col;
            return r_ * (col - 1);
        }
        if (r_ == 1) return col == 0 ? 0 : col - 1;
        if (col == 0) return 1;
        if (col == 1) return 0;
        return r_ * (col - 1);
    }

    // The interpolation is done with (plane, col) once the pipeline is past
    // that column's last scheduled load.
    bool ti_done_with(int plane, int col) const {
        if (long(plane - 1) * r_ > long(h_) - 1) return true;  // never read
        long last_read_row = std::min(long(plane + 1) * r_ - 1, long(h_) - 1);
        long ox_now = long(cur_x_) - lag_;
        if (ox_now > last_read_row) return true;
        if (ox_now < last_read_row) return false;
        return cur_y_ > ti_load_in_row(col);
    }

    // A blurred column may be overwritten only after its previous occupant is
    // dead; the blur idles otherwise.
    bool gf_slot_free(int plane, int col) const {
        int owner = gf_owner_[std::size_t(plane % 2)][std::size_t(col)];
        if (owner < 0 || owner < plane - 2) return true;
        if (owner >= plane)
            throw std::logic_error("cycle " + std::to_string(st_.cycle) +
                                   ": gf store ordering broken at column " + std::to_string(col));
        return ti_done_with(owner, col);
    }

    void gf_step() {
        if (gf_phase_ == GfPhase::idle) {
            if (gf_pending_.empty()) return;
            gf_plane_ = gf_pending_.front();
            gf_pending_.pop_front();
            gf_phase_ = GfPhase::regload;
            gf_regload_ = 0;
        }
        if (gf_phase_ == GfPhase::regload) {
            int col = gf_regload_;  // columns 0 and 1
            if (!triple_readable(gf_plane_, col) || !triple_fits(gf_plane_, col)) return;
            if (gf_regload_ == 0) zero_reg_slot(0);  // column -1 is off-lattice
            read_grid_triple(gf_plane_, col, 1 + col);
            gf_regload_ += 1;
            if (gf_regload_ == 2) {
                gf_phase_ = GfPhase::run;
                st_.cnt_y = 0;
                st_.cnt_z = 0;
            }
            return;
        }
        if (gf_phase_ == GfPhase::wait_shift) {
            if (!triple_readable(gf_plane_, gf_shift_col_) || !triple_fits(gf_plane_, gf_shift_col_))
                return;
            rotate_reg_gf();
            read_grid_triple(gf_plane_, gf_shift_col_, 2);
            gf_phase_ = GfPhase::run;
            return;  // next element starts the following cycle
        }
        // run: compute element (gf_plane_, cnt_y, cnt_z); a column only starts
        // once its output slot is free to take the store
        if (st_.cnt_z == 0 && !gf_slot_free(gf_plane_, st_.cnt_y)) return;
        compute_gf_element();
        if (st_.cnt_z == dims_.gz - 1) {
            store_gf_column();
            st_.cnt_y += 1;
            st_.cnt_z = 0;
            if (st_.cnt_y == dims_.gy) {
                gf_phase_ = GfPhase::idle;
                return;
            }
            int next_col = st_.cnt_y + 1;  // reg must advance to (cnt_y-1 .. cnt_y+1)
            if (next_col >= dims_.gy) {
                rotate_reg_gf();
                zero_reg_slot(2);
            } else if (triple_readable(gf_plane_, next_col) && triple_fits(gf_plane_, next_col)) {
                rotate_reg_gf();
                read_grid_triple(gf_plane_, next_col, 2);
            } else {
                gf_phase_ = GfPhase::wait_shift;
                gf_shift_col_ = next_col;
            }
        } else {
            st_.cnt_z += 1;
        }
    }

    void compute_gf_element() {
        const int gz = dims_.gz;
        const int z = st_.cnt_z;
        std::int64_t cnt[3][3][3], sm[3][3][3];
        for (int dp = 0; dp < 3; ++dp)
            for (int dc = 0; dc < 3; ++dc) {
                const std::int64_t* c =
                    &st_.reg_gf_cnt[(std::size_t(dp) * 3 + std::size_t(dc)) * std::size_t(gz)];
                const std::int64_t* s =
                    &st_.reg_gf_sum[(std::size_t(dp) * 3 + std::size_t(dc)) * std::size_t(gz)];
                for (int dz = 0; dz < 3; ++dz) {
                    int zz = z + dz - 1;
                    bool in = zz >= 0 && zz < gz;
                    cnt[dp][dc][dz] = in ? c[zz] : 0;
                    sm[dp][dc][dz] = in ? s[zz] : 0;
                }
            }
        gf_colbuf_[std::size_t(z)] = blur_cell(cnt, sm, wt_);
        ops_ += 80;  // 54 multiplies + adds + divide, fixed per element
    }

    void store_gf_column() {
        int part = gf_plane_ % 2;
        touch_gf(gf_plane_);
        std::copy(gf_colbuf_.begin(), gf_colbuf_.end(),
                  gf_cells_[std::size_t(part)].begin() +
                      std::size_t(st_.cnt_y) * std::size_t(dims_.gz));
        gf_owner_[std::size_t(part)][std::size_t(st_.cnt_y)] = gf_plane_;
        gf_store_[std::size_t(part)][std::size_t(st_.cnt_y)] = st_.cycle;
    }

    // ---- TI register window and loads
    struct TiSlot {
        int plane = -1;
        int col = -1;
        bool valid = false;
    };

    struct LoadPlan {
        int col = -1;
        int slot = -1;
        bool shift_first = false;
        bool any = false;
    };

    LoadPlan ti_load_plan(int oy) const {
        LoadPlan lp;
        if (opt_.ti_weights == TiWeights::standard) {
            if (r_ == 1) {
                lp = {oy, 0, false, true};
            } else if (oy == 0) {
                lp = {0, 0, false, true};
            } else if (oy == 1) {
                lp = {1, 1, false, true};
            } else if (oy % r_ == 0) {
                lp = {oy / r_ + 1, 1, true, true};
            }
        } else {
            if (r_ == 1) {
                lp = {oy + 1, 1, true, true};
            } else if (oy == 0) {
                lp = {1, 1, false, true};
            } else if (oy == 1) {
                lp = {0, 0, false, true};
            } else if (oy % r_ == 0) {
                lp = {oy / r_ + 1, 1, true, true};
            }
        }
        return lp;
    }

    bool gf_readable(int plane, int col, long at_cycle) const {
        int part = plane % 2;
        int owner = gf_owner_[std::size_t(part)][std::size_t(col)];
        if (owner > plane)
            throw std::logic_error("cycle " + std::to_string(st_.cycle) + ": gf" +
                                   std::to_string(part) + " column " + std::to_string(col) +
                                   " overwritten before interpolation of plane " +
                                   std::to_string(plane));
        return owner == plane && gf_store_[std::size_t(part)][std::size_t(col)] < at_cycle;
    }

    // Suspend the input (whole stall cycles; the blur keeps running) until the
    // columns this cycle's interpolation loads are present.
    void resolve_ti_stalls(int oy) {
        LoadPlan lp = ti_load_plan(oy);
        if (!lp.any) return;
        long guard = 0;
        const long guard_max = 4L * long(dims_.gy) * dims_.gz + 8L * w_ + 64;
        while (!(gf_readable(oxc_.cell, lp.col, st_.cycle) &&
                 gf_readable(oxc_.cell + 1, lp.col, st_.cycle))) {
            begin_cycle();
            gf_step();
            end_cycle(true);
            if (++guard > guard_max)
                throw std::logic_error("cycle " + std::to_string(st_.cycle) +
                                       ": stall deadlock waiting for gf column " +
                                       std::to_string(lp.col));
        }
    }

    void ti_execute_loads(int oy) {
        LoadPlan lp = ti_load_plan(oy);
        if (!lp.any) return;
        for (int i = 0; i < 2; ++i) {
            int plane = oxc_.cell + i;
            if (lp.shift_first) {
                ti_meta_[i][0] = ti_meta_[i][1];
                const std::size_t gz = std::size_t(dims_.gz);
                std::copy(st_.reg_ti.begin() + (std::size_t(i) * 2 + 1) * gz,
                          st_.reg_ti.begin() + (std::size_t(i) * 2 + 2) * gz,
                          st_.reg_ti.begin() + (std::size_t(i) * 2 + 0) * gz);
            }
            if (!gf_readable(plane, lp.col, st_.cycle))
                throw std::logic_error("cycle " + std::to_string(st_.cycle) + ": gf column " +
                                       std::to_string(lp.col) + " of plane " +
                                       std::to_string(plane) + " not produced before load");
            touch_gf(plane);
            const std::size_t gz = std::size_t(dims_.gz);
            const GfCell* src = &gf_cells_[std::size_t(plane % 2)]
                                          [std::size_t(lp.col) * gz];
            std::copy(src, src + gz,
                      st_.reg_ti.begin() + (std::size_t(i) * 2 + std::size_t(lp.slot)) * gz);
            ti_meta_[i][lp.slot] = {plane, lp.col, true};
        }
    }

    void ti_emit(int oy, std::uint8_t l) {
        AxisCoord ay = axis_coord(oy, r_);
        ZCoord az = z_coord(l, zscale_);
        double fy[2], fz[2];
        ti_axis_pair(st_.luts.l3[std::size_t(oy % r_)], opt_.ti_weights, fy);
        ti_axis_pair(az.frac, opt_.ti_weights, fz);
        GfCell corners[2][2][2];
        const std::size_t gz = std::size_t(dims_.gz);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const TiSlot& slot = ti_meta_[i][j];
                bool usable = slot.valid && slot.plane == oxc_.cell + i && slot.col == ay.cell + j;
                if (!usable && (fx_[i] * fy[j]) != 0.0)
                    throw std::logic_error(
                        "cycle " + std::to_string(st_.cycle) + ": interpolation needs gf plane " +
                        std::to_string(oxc_.cell + i) + " column " + std::to_string(ay.cell + j) +
                        " which is not in the register window");
                for (int k = 0; k < 2; ++k)
                    corners[i][j][k] =
                        usable ? st_.reg_ti[(std::size_t(i) * 2 + std::size_t(j)) * gz +
                                            std::size_t(az.cell + k)]
                               : GfCell{};
            }
        ops_ += 30;
        out_.at(ox_, oy) = std::uint8_t(round_intensity(interpolate_corners(corners, fx_, fy, fz)));
    }

    // ---- one pipeline cycle
    void normal_cycle(int x, int y) {
        begin_cycle();

        // grid construction, while input pixels remain
        if (x < h_) {
            std::uint8_t l = img_.at(x, y);
            int pz = st_.luts.l1[l];
            lb_push(l);
            bool left = (y == 0) || (st_.cy == 0);
            bool right = (st_.cy == r_ - 1) || (y == w_ - 1);
            if (left) {
                if (row_first_) {
                    std::fill(st_.grid_z.begin(), st_.grid_z.end(), GridCell{});
                } else {
                    int part = row_blk_ % 3;
                    if (grid_owner_[std::size_t(part)][std::size_t(st_.py)] != row_blk_)
                        throw std::logic_error("cycle " + std::to_string(st_.cycle) +
                                               ": grid row register reload from foreign plane");
                    touch_grid(row_blk_);
                    unpack_column(grid_cols_[std::size_t(part)][std::size_t(st_.py)], widths_,
                                  st_.grid_z);
                }
            }
            st_.grid_z[std::size_t(pz)].count += 1;
            st_.grid_z[std::size_t(pz)].sum += l;
            ops_ += 2;
            if (right) {
                int part = row_blk_ % 3;
                touch_grid(row_blk_);
                grid_cols_[std::size_t(part)][std::size_t(st_.py)] = pack_column(st_.grid_z, widths_);
                grid_owner_[std::size_t(part)][std::size_t(st_.py)] = row_blk_;
                grid_complete_[std::size_t(part)][std::size_t(st_.py)] = row_last_ ? 1 : 0;
                grid_store_[std::size_t(part)][std::size_t(st_.py)] = st_.cycle;
            }
        }

        // blur trigger: the newest plane's column 1 completes at (R_end, c1);
        // the same cadence covers the padding planes after the input ends.
        if (y == c1_ && x >= r_ + ch_ - 1 && (x - ch_ + 1) % r_ == 0) {
            int q = (x - ch_ + 1) / r_ - 1;
            if (q >= 0 && q < dims_.gx) gf_pending_.push_back(q);
        }
        gf_step();

        // interpolation, once the lead-in has passed
        if (x >= lag_) {
            ti_execute_loads(y);
            std::uint8_t l = lb_pop();
            ti_emit(y, l);
        }

        advance_counters_core(st_.cx, st_.py, st_.cy, y, w_, r_);
        end_cycle(false);
    }

    // ---- members
    const Image& img_;
    StreamOptions opt_;
    GfWeights wt_;
    Image out_;

    int w_ = 0, h_ = 0, r_ = 0, ch_ = 0, lag_ = 0, total_rows_ = 0, c1_ = 0;
    GridDims dims_;
    double zscale_ = 0.0;
    CellWidths widths_;
    int bx_last_ = 0, by_last_ = 0;

    std::array<std::vector<PackedColumn>, 3> grid_cols_;
    std::array<std::vector<int>, 3> grid_owner_;
    std::array<std::vector<char>, 3> grid_complete_;
    std::array<std::vector<long>, 3> grid_store_;

    std::array<std::vector<GfCell>, 2> gf_cells_;
    std::array<std::vector<int>, 2> gf_owner_;
    std::array<std::vector<long>, 2> gf_store_;

    PipelineState st_;
    std::size_t lb_cap_ = 0, lb_peak_ = 0;

    GfPhase gf_phase_ = GfPhase::idle;
    int gf_plane_ = -1, gf_regload_ = 0, gf_shift_col_ = -1;
    std::deque<int> gf_pending_;
    std::vector<GridCell> unpack_buf_;
    std::vector<GfCell> gf_colbuf_;

    TiSlot ti_meta_[2][2];
    int row_blk_ = 0, ox_ = 0, cur_x_ = 0, cur_y_ = 0;
    bool row_first_ = false, row_last_ = false;
    AxisCoord oxc_{};
    double fx_[2] = {0, 0};

    int acc_grid_[3] = {0, 0, 0};
    int acc_gf_[2] = {0, 0};
    int acct_grid_[3] = {0, 0, 0};
    int acct_gf_[2] = {0, 0};
    int lb_enq_ = 0, lb_deq_ = 0;
    int max_lb_ = 0;
    std::array<int, 3> max_acct_grid_{0, 0, 0};
    std::array<int, 2> max_acct_gf_{0, 0};
    int ops_ = 0, max_ops_ = 0;
    std::vector<AccessViolation> violations_;
};

}  // namespace detail

// Runs the fused line-buffered engine. The output is bit-identical to
// bg_denoise under the same arithmetic mode and coefficient convention.
// Widths below 2r fall back to the three-pass engine, flagged in the report.
inline std::pair<Image, CycleReport> run_streaming(const Image& img, const DenoiseParams& p,
                                                   const std::optional<ShiftKernel>& mode = {},
                                                   const StreamOptions& opt = {}) {
    p.validate();
    if (img.width < 1 || img.height < 1) throw std::invalid_argument("image must be non-empty");
    StreamOptions o = opt;
    o.grid_partitions = std::max(1, std::min(3, o.grid_partitions));
    o.gf_partitions = std::max(1, std::min(2, o.gf_partitions));

    CycleReport rep;
    if (img.width < 2 * p.radius) {
        rep.fallback = true;
        rep.dims = grid_dimensions(p, img.width, img.height);
        rep.live_cells = 5L * rep.dims.gy * rep.dims.gz;
        return {bg_denoise(img, p, mode, o.ti_weights), rep};
    }
    detail::StreamingSim sim(img, p, mode, o);
    Image out = sim.run(rep);
    return {std::move(out), std::move(rep)};
}

}  // namespace bgrid
