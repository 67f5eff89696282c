//! Verify that every key cited in a manuscript exists in the bibliography.

use std::path::Path;

use coevolve::report::{extract_cite_keys, verify_citations, Bibliography, Verdict};

const MANUSCRIPT: &str = r"
Matching decoders \citep{dennis2002, fowler2012} remain the baseline;
adaptive weighting follows \citet{wang2021}. See also \cite{fowler2012,missing2024}.
";

const BIBTEX: &str = r"
@article{dennis2002, title={Topological quantum memory}}
@article{fowler2012, title={Surface codes}}
@article{wang2021, title={Gradient pathologies}}
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let extracted = extract_cite_keys(MANUSCRIPT);
    println!("cited keys: {:?}", extracted.keys);
    let bib = Bibliography::parse(BIBTEX, Path::new("refs.bib"))?;
    println!("bibliography keys: {:?}", bib.keys);
    match verify_citations(&extracted.keys, &bib) {
        Verdict::Pass => println!("pass (exit 0)"),
        Verdict::Fail { missing } => println!("fail (exit 2): missing {missing:?}"),
    }
    Ok(())
}
