use crate::{ensure, Check};
use difftree::corpus::{parse_wos_plaintext, to_wos_plaintext, CitationRecord, ParseWarning};

fn rec(id: &str, title: &str, year: i32) -> CitationRecord {
    CitationRecord {
        record_id: id.into(),
        title: title.into(),
        year,
        abstract_text: String::new(),
        addresses: vec![],
        wos_categories: vec![],
        research_areas: vec![],
        doi: None,
        url: None,
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

struct Fixture {
    name: &'static str,
    text: String,
    records: Vec<CitationRecord>,
    warnings: Vec<ParseWarning>,
}

fn fixtures() -> Vec<Fixture> {
    let mut out = Vec::new();

    out.push(Fixture {
        name: "minimal record",
        text: "FN Export\nVR 1.0\nPT J\nTI Regional rainfall variation\nPY 2016\nUT WOS:1\nER\nEF\n".into(),
        records: vec![rec("WOS:1", "Regional rainfall variation", 2016)],
        warnings: vec![],
    });

    let mut r = rec("WOS:2", "A measure of regional rainfall variation", 2016);
    r.abstract_text = "Rainfall variation is the spread of totals across regions.".into();
    out.push(Fixture {
        name: "multiline title and abstract",
        text: "PT J\nTI A measure of regional\n   rainfall variation\nPY 2016\nAB Rainfall variation is\n   the spread of totals\n   across regions.\nUT WOS:2\nER\nEF\n"
            .into(),
        records: vec![r],
        warnings: vec![],
    });

    let mut r = rec("WOS:3", "Multiple affiliations", 2017);
    r.addresses = strings(&[
        "[Smith, A] Peking Univ, Beijing 100871, Peoples R China.",
        "[Jansen, B] Delft Univ Technol, Delft, Netherlands.",
        "[Li, X] Univ Oxford, Oxford, England.",
    ]);
    out.push(Fixture {
        name: "one address per C1 line",
        text: "PT J\nTI Multiple affiliations\nPY 2017\nC1 [Smith, A] Peking Univ, Beijing 100871, Peoples R China.\n   [Jansen, B] Delft Univ Technol, Delft, Netherlands.\n   [Li, X]   Univ Oxford,  Oxford, England.\nUT WOS:3\nER\nEF\n"
            .into(),
        records: vec![r],
        warnings: vec![],
    });

    let mut r = rec("WOS:4", "Categories", 2018);
    r.wos_categories = strings(&["Geography, Physical", "Environmental Sciences", "Public Health"]);
    r.research_areas = strings(&["Physical Geography", "Environmental Sciences & Ecology"]);
    out.push(Fixture {
        name: "semicolon lists across lines",
        text: "PT J\nTI Categories\nPY 2018\nWC Geography, Physical; Environmental\n   Sciences; Public Health\nSC Physical Geography; Environmental Sciences & Ecology;\nUT WOS:4\nER\nEF\n"
            .into(),
        records: vec![r],
        warnings: vec![],
    });

    out.push(Fixture {
        name: "optional tags missing",
        text: "PT J\nAU Someone\nTI Bare\nPY 2012\nER\nEF\n".into(),
        records: vec![rec("REC-000001", "Bare", 2012)],
        warnings: vec![],
    });

    out.push(Fixture {
        name: "trailing junk after EF",
        text: "PT J\nTI Kept\nPY 2013\nUT WOS:6\nER\nEF\n\nSaved on 2021-03-07 by someone\nmore junk\n".into(),
        records: vec![rec("WOS:6", "Kept", 2013)],
        warnings: vec![ParseWarning::TrailingContent { line: 8 }],
    });

    out.push(Fixture {
        name: "missing and invalid years",
        text: "PT J\nTI No year\nUT WOS:7a\nER\nPT J\nTI Bad year\nPY in press\nUT WOS:7b\nER\nPT J\nTI Good\nPY 2019\nUT WOS:7c\nER\nEF\n"
            .into(),
        records: vec![rec("WOS:7c", "Good", 2019)],
        warnings: vec![
            ParseWarning::MissingYear {
                record_id: "WOS:7a".into(),
                line: 1,
            },
            ParseWarning::InvalidYear {
                record_id: "WOS:7b".into(),
                value: "in press".into(),
                line: 5,
            },
        ],
    });

    out.push(Fixture {
        name: "byte-order mark and CRLF",
        text: "\u{feff}FN Export\r\nVR 1.0\r\nPT J\r\nTI Windows\r\n   line endings\r\nPY 2015\r\nUT WOS:8\r\nER\r\nEF\r\n".into(),
        records: vec![rec("WOS:8", "Windows line endings", 2015)],
        warnings: vec![],
    });

    let mut r = rec("WOS:9", "Identifiers", 2020);
    r.doi = Some("10.1000/j.test.2016.02.052".into());
    r.url = Some("https://example.org/paper".into());
    out.push(Fixture {
        name: "DOI and URL",
        text: "PT J\nTI Identifiers\nPY 2020\nDI 10.1000/j.test.2016.02.052\nUR https://example.org/paper\nUT WOS:9\nER\nEF\n".into(),
        records: vec![r],
        warnings: vec![],
    });

    out.push(Fixture {
        name: "repeated record id",
        text: "PT J\nTI First\nPY 2014\nUT WOS:10\nER\nPT J\nTI Second\nPY 2014\nUT WOS:10\nER\nEF\n".into(),
        records: vec![rec("WOS:10", "First", 2014), rec("REC-000002", "Second", 2014)],
        warnings: vec![ParseWarning::DuplicateRecordId {
            record_id: "WOS:10".into(),
            line: 6,
        }],
    });

    out.push(Fixture {
        name: "empty title excluded",
        text: "PT J\nTI   \nPY 2014\nUT WOS:11a\nER\nPT J\nTI Titled\nPY 2014\nUT WOS:11b\nER\nEF\n".into(),
        records: vec![rec("WOS:11b", "Titled", 2014)],
        warnings: vec![ParseWarning::EmptyTitle {
            record_id: "WOS:11a".into(),
            line: 1,
        }],
    });

    let mut r = rec("WOS:12", "Unknown tags ignored", 2011);
    r.abstract_text = "Kept.".into();
    out.push(Fixture {
        name: "unrecognized tags and blank lines",
        text: "FN Export\nVR 1.0\n\nPT J\nAU Smith, A\n   Jansen, B\nSO GEOGRAPHICAL ANALYSIS\nTI Unknown tags ignored\nPY 2011\nTC 42\nAB Kept.\nUT WOS:12\nER\n\n\nEF\n"
            .into(),
        records: vec![r],
        warnings: vec![],
    });

    out
}

pub fn check() -> Check {
    let fixtures = fixtures();
    for f in &fixtures {
        let parsed = parse_wos_plaintext(&f.text).map_err(|e| format!("{}: {e}", f.name))?;
        ensure!(
            parsed.corpus.records == f.records,
            "{}: records differ\n got {:?}\nwant {:?}",
            f.name,
            parsed.corpus.records,
            f.records
        );
        ensure!(parsed.warnings == f.warnings, "{}: warnings {:?}", f.name, parsed.warnings);
        let again = parse_wos_plaintext(&to_wos_plaintext(&parsed.corpus)).map_err(|e| format!("{}: {e}", f.name))?;
        ensure!(again.corpus.records == parsed.corpus.records, "{}: round trip differs", f.name);
        ensure!(again.warnings.is_empty(), "{}: round trip warned {:?}", f.name, again.warnings);
    }
    for bad in ["PT J\nTI Open\nPY 2010\nEF\n", "TI Orphan\n", "PT J\nTI x\nPY 2010\n"] {
        ensure!(parse_wos_plaintext(bad).is_err(), "malformed input accepted: {bad:?}");
    }
    Ok(format!("{} fixtures parse exactly and round-trip", fixtures.len()))
}
