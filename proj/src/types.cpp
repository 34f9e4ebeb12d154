#include "anisosurf/types.hpp"

#include <set>
#include <sstream>

namespace anisosurf {

ValidationReport validate_dataset(const SurfaceDataset& dataset) {
    ValidationReport report;
    std::set<std::int64_t> seen;
    for (const Sheet& sheet : dataset.sheets) {
        if (seen.count(sheet.id)) {
            std::ostringstream os;
            os << "duplicate_id: " << sheet.id;
            report.issues.push_back({"duplicate_id", sheet.id, 0, os.str()});
        }
        seen.insert(sheet.id);

        if (sheet.points.empty()) {
            report.issues.push_back({"empty_sheet", sheet.id, 0, "sheet has no observations"});
            continue;
        }
        if (sheet.points.size() != sheet.values.size()) {
            report.issues.push_back(
                {"length_mismatch", sheet.id, 0, "points and values differ in length"});
        }
        for (std::size_t m = 0; m < sheet.points.size(); ++m) {
            if (!dataset.domain.contains(sheet.points[m])) {
                std::ostringstream os;
                os << "out_of_domain: sheet " << sheet.id << " point " << m << " at ("
                   << sheet.points[m].t1 << ", " << sheet.points[m].t2 << ")";
                report.issues.push_back({"out_of_domain", sheet.id, m, os.str()});
            }
        }
    }
    return report;
}

bool interior_margin(const Domain& domain, const Point& t, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("interior_margin: delta must be > 0");
    const double off = 2.0 * delta;
    return t.t1 - off >= domain.t1_min && t.t1 + off <= domain.t1_max &&
           t.t2 - off >= domain.t2_min && t.t2 + off <= domain.t2_max;
}

}  // namespace anisosurf
