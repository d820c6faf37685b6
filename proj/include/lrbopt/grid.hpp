#ifndef LRBOPT_GRID_HPP
#define LRBOPT_GRID_HPP

#include <algorithm>
#include <array>
#include <stdexcept>
#include <vector>

namespace lrbopt {

enum class FaceType { inner, interface, boundary };

// One fine-grid face. The unit normal points from cell_minus to cell_plus;
// on boundary faces it points out of the domain and cell_plus is -1.
struct Face {
    FaceType type;
    int axis;      // 0: normal along x (vertical face), 1: normal along y
    int cell_minus;
    int cell_plus;
    std::array<double, 2> center;
    std::array<double, 2> normal;
    double length;
};

// Structured two-level quadrilateral mesh of [0,1]^2: an n_H x n_H coarse
// grid of subdomains T_j, each carrying a nested s x s fine grid. All
// connectivity is arithmetic; the mesh is immutable after construction.
class TwoLevelMesh {
public:
    TwoLevelMesh(int n_coarse, int fine_per_subdomain)
        : n_H_(n_coarse), s_(fine_per_subdomain) {
        if (n_coarse < 1 || fine_per_subdomain < 1)
            throw std::invalid_argument("TwoLevelMesh: sizes must be >= 1");
        n_ = n_H_ * s_;
        h_ = 1.0 / static_cast<double>(n_);
        build_faces();
    }

    int n_coarse() const { return n_H_; }
    int fine_per_subdomain() const { return s_; }
    int n_fine_global() const { return n_; }          // fine cells per axis
    double h() const { return h_; }
    double coarse_size() const { return 1.0 / static_cast<double>(n_H_); }

    int num_subdomains() const { return n_H_ * n_H_; }
    int num_fine_cells() const { return n_ * n_; }

    int cell_index(int cx, int cy) const { return cy * n_ + cx; }
    int cell_x(int c) const { return c % n_; }
    int cell_y(int c) const { return c / n_; }

    int subdomain_of_cell(int c) const {
        return (cell_y(c) / s_) * n_H_ + (cell_x(c) / s_);
    }

    // lower-left corner of a fine cell
    std::array<double, 2> cell_lower(int c) const {
        return {cell_x(c) * h_, cell_y(c) * h_};
    }
    std::array<double, 2> cell_center(int c) const {
        return {(cell_x(c) + 0.5) * h_, (cell_y(c) + 0.5) * h_};
    }

    int subdomain_x(int j) const { return j % n_H_; }
    int subdomain_y(int j) const { return j / n_H_; }
    std::array<double, 2> coarse_lower(int j) const {
        const double H = coarse_size();
        return {subdomain_x(j) * H, subdomain_y(j) * H};
    }

    const std::vector<Face>& faces() const { return faces_; }

    // subdomains sharing at least a vertex with j (one layer), including j
    std::vector<int> vertex_neighbors(int j) const {
        check_subdomain(j);
        std::vector<int> out;
        const int jx = subdomain_x(j), jy = subdomain_y(j);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int x = jx + dx, y = jy + dy;
                if (x >= 0 && x < n_H_ && y >= 0 && y < n_H_)
                    out.push_back(y * n_H_ + x);
            }
        std::sort(out.begin(), out.end());
        return out;
    }

    // subdomains sharing an interface face with j (edge neighbors), excluding j
    std::vector<int> edge_neighbors(int j) const {
        check_subdomain(j);
        std::vector<int> out;
        const int jx = subdomain_x(j), jy = subdomain_y(j);
        const int dx[] = {-1, 1, 0, 0}, dy[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const int x = jx + dx[k], y = jy + dy[k];
            if (x >= 0 && x < n_H_ && y >= 0 && y < n_H_)
                out.push_back(y * n_H_ + x);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    void check_subdomain(int j) const {
        if (j < 0 || j >= num_subdomains())
            throw std::out_of_range("TwoLevelMesh: subdomain index out of range");
    }

private:
    void build_faces() {
        faces_.reserve(static_cast<std::size_t>(2 * n_) * (n_ + 1));
        // vertical faces (normal along x), at x = fx*h, fx = 0..n
        for (int fx = 0; fx <= n_; ++fx)
            for (int fy = 0; fy < n_; ++fy) {
                Face f;
                f.axis = 0;
                f.length = h_;
                f.center = {fx * h_, (fy + 0.5) * h_};
                if (fx == 0) {
                    f.type = FaceType::boundary;
                    f.cell_minus = cell_index(0, fy);
                    f.cell_plus = -1;
                    f.normal = {-1.0, 0.0};
                } else if (fx == n_) {
                    f.type = FaceType::boundary;
                    f.cell_minus = cell_index(n_ - 1, fy);
                    f.cell_plus = -1;
                    f.normal = {1.0, 0.0};
                } else {
                    f.type = (fx % s_ == 0) ? FaceType::interface : FaceType::inner;
                    f.cell_minus = cell_index(fx - 1, fy);
                    f.cell_plus = cell_index(fx, fy);
                    f.normal = {1.0, 0.0};
                }
                faces_.push_back(f);
            }
        // horizontal faces (normal along y), at y = fy*h, fy = 0..n
        for (int fy = 0; fy <= n_; ++fy)
            for (int fx = 0; fx < n_; ++fx) {
                Face f;
                f.axis = 1;
                f.length = h_;
                f.center = {(fx + 0.5) * h_, fy * h_};
                if (fy == 0) {
                    f.type = FaceType::boundary;
                    f.cell_minus = cell_index(fx, 0);
                    f.cell_plus = -1;
                    f.normal = {0.0, -1.0};
                } else if (fy == n_) {
                    f.type = FaceType::boundary;
                    f.cell_minus = cell_index(fx, n_ - 1);
                    f.cell_plus = -1;
                    f.normal = {0.0, 1.0};
                } else {
                    f.type = (fy % s_ == 0) ? FaceType::interface : FaceType::inner;
                    f.cell_minus = cell_index(fx, fy - 1);
                    f.cell_plus = cell_index(fx, fy);
                    f.normal = {0.0, 1.0};
                }
                faces_.push_back(f);
            }
    }

    int n_H_;
    int s_;
    int n_;
    double h_;
    std::vector<Face> faces_;
};

inline TwoLevelMesh build_mesh(int n_coarse, int fine_per_subdomain) {
    return TwoLevelMesh(n_coarse, fine_per_subdomain);
}

// A face on the patch hull: inner_cell belongs to the patch, outer_cell does
// not. minus_is_inner records whether the mesh-level t^- side is the patch side.
struct PatchFace {
    int face;
    int inner_cell;
    int outer_cell;
    bool minus_is_inner;
};

// Oversampling patch O_T: the coarse cell plus one layer of vertex neighbors.
struct OversamplingPatch {
    int center;
    std::vector<int> members;        // coarse cell indices, sorted
    std::vector<PatchFace> outer_faces; // faces on the hull, excluding those on the domain boundary

    bool contains(int j) const {
        return std::binary_search(members.begin(), members.end(), j);
    }
};

inline OversamplingPatch patch(const TwoLevelMesh& mesh, int center) {
    mesh.check_subdomain(center);
    OversamplingPatch p;
    p.center = center;
    p.members = mesh.vertex_neighbors(center);
    const auto& faces = mesh.faces();
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi) {
        const Face& f = faces[fi];
        if (f.type == FaceType::boundary) continue;
        const bool in_m = p.contains(mesh.subdomain_of_cell(f.cell_minus));
        const bool in_p = p.contains(mesh.subdomain_of_cell(f.cell_plus));
        if (in_m == in_p) continue;
        PatchFace pf;
        pf.face = fi;
        pf.minus_is_inner = in_m;
        pf.inner_cell = in_m ? f.cell_minus : f.cell_plus;
        pf.outer_cell = in_m ? f.cell_plus : f.cell_minus;
        p.outer_faces.push_back(pf);
    }
    return p;
}

} // namespace lrbopt

#endif
