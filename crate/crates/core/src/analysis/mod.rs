pub mod random;
pub mod report;
pub mod suite;
pub mod sweep;
pub mod testing;

pub use report::{strong_report, weak_report, InequalityReport, ReportKind, RhsFactors};
pub use suite::{lemma_suite, report_suite, CheckResult, Group, ReportSuite, Status, SuiteConfig, SuiteResult};
pub use sweep::{sharpness_sweep, SlopeCheck, SweepConfig, SweepResult, SweepRow};
pub use testing::{testing_constant, testing_equiv_report, tuple_ratios, TestingReport};
