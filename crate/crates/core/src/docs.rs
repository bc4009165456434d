//! The coverage map in `docs/COVERAGE.md` and its completeness check.

/// Ids every build must map to code and a test.
pub const REQUIRED: &[&str] = &[
    "walk-matrix",
    "color-classes",
    "recursive-propagation",
    "loop-augmented-graph",
    "short-walks",
    "long-walks",
    "stconn-assembly",
    "representative-multiset",
    "pairwise-hashing",
    "hash-hits-set",
    "walk-confinement",
    "representative-set",
    "grid-graph",
    "inner-recursion",
    "masking-oracle",
    "layered-classes",
    "outer-recursion",
    "grid-path-weight",
    "edit-distance-reduction",
    "lcs-reduction",
    "digit-windows",
    "frechet-reduction",
    "frechet-zero-test",
    "field-ops",
    "random-prime",
    "crr-bit-access",
    "register-allocation",
];

pub const COVERAGE_MD: &str = include_str!("../../../docs/COVERAGE.md");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverageEntry {
    pub id: String,
    pub module: String,
    pub operation: String,
    pub test: String,
}

/// Rows of the first markdown table in `md` with four columns, header and
/// separator excluded.
pub fn parse_coverage(md: &str) -> Vec<CoverageEntry> {
    md.lines()
        .map(str::trim)
        .filter(|l| l.starts_with('|'))
        .map(|l| l.trim_matches('|').split('|').map(|c| c.trim().trim_matches('`').to_string()).collect::<Vec<_>>())
        .filter(|c| c.len() == 4 && c[0] != "id" && !c[0].starts_with('-'))
        .map(|c| CoverageEntry { id: c[0].clone(), module: c[1].clone(), operation: c[2].clone(), test: c[3].clone() })
        .collect()
}

/// Required ids that `md` does not map exactly once.
pub fn unmapped(md: &str) -> Vec<String> {
    let rows = parse_coverage(md);
    REQUIRED
        .iter()
        .filter(|id| rows.iter().filter(|r| r.id == **id).count() != 1)
        .map(|id| id.to_string())
        .collect()
}

/// Required ids not mapped exactly once by the shipped coverage map.
pub fn doc_coverage_check() -> Vec<String> {
    unmapped(COVERAGE_MD)
}
