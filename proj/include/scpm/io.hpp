#ifndef SCPM_IO_HPP
#define SCPM_IO_HPP

#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scpm/decode_nms.hpp"
#include "scpm/grid.hpp"
#include "scpm/matching.hpp"

namespace scpm {

// Malformed input file; the message carries the source and line when known.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Nodules keyed by seriesuid, in file order within a scan.
using AnnotationTable = std::map<std::string, std::vector<NoduleAnnotation>>;
// Candidates keyed by seriesuid, in file order within a scan.
using CandidateTable = std::map<std::string, std::vector<Candidate>>;

inline constexpr std::string_view kAnnotationHeader = "seriesuid,coordX,coordY,coordZ,diameter_mm";
inline constexpr std::string_view kCandidateHeader =
    "seriesuid,coordX,coordY,coordZ,radius,probability";
inline constexpr std::string_view kGridMagic = "SCPMGRID1";

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Annotation CSV: radius = diameter_mm / 2; nodule ids are "<seriesuid>#<k>"
/// with k the 0-based row index within the scan.
AnnotationTable parse_annotations_csv(std::istream& in, const std::string& source = "<stream>");
AnnotationTable read_annotations_csv(const std::filesystem::path& path);
std::string annotations_csv(const AnnotationTable& table);

CandidateTable parse_candidates_csv(std::istream& in, const std::string& source = "<stream>");
CandidateTable read_candidates_csv(const std::filesystem::path& path);
// Rows grouped by seriesuid (ascending); each scan's rows in ranks_before
// order.
std::string candidates_csv(const CandidateTable& table);

/// Prediction grid file.
///
/// Layout: the magic "SCPMGRID1", '\n', one line of JSON header
/// {"dims":[D,H,W],"stride":R,"level":L,"dtype":"f32le"[,"scan_id":S]},
/// '\n', then D*H*W*5 little-endian float32 values: M_C, M_R, and the
/// three offset channels (x, y, z), each map in z-major cell order.
struct GridFile {
  std::string scan_id;  // empty when the header does not name a scan
  PredictionGrid grid;
};

std::string encode_grid(const PredictionGrid& grid, const std::string& scan_id = {});
GridFile decode_grid(std::string_view bytes, const std::string& source = "<bytes>");
GridFile read_grid_file(const std::filesystem::path& path);
void write_grid_file(const std::filesystem::path& path, const PredictionGrid& grid,
                     const std::string& scan_id = {});

/// Per-cell loss map for OHEM: JSON {"dims":[D,H,W],"values":[...]} with
/// values in z-major cell order.
std::vector<double> read_loss_map(const std::filesystem::path& path, const GridDims& expected);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace scpm

#endif  // SCPM_IO_HPP
