//! Run reports and the citation-key gate for manuscripts.

mod citations;
mod render;

pub use citations::{
    extract_cite_keys, verify_citations, Bibliography, BibliographyError, CiteKeys, ParseWarning, Verdict, EXIT_FAIL,
    EXIT_IO, EXIT_PASS,
};
pub use render::{render_report, render_report_text};
