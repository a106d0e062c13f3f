use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DocType, Document, RetrievalError};

const LINKS_FILE: &str = "links.jsonl";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    id: String,
    text: String,
    category: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkRow {
    from: String,
    to: String,
}

fn store_err(path: &Path, message: impl ToString) -> RetrievalError {
    RetrievalError::Store {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

/// Write one `<type>.jsonl` file per document type plus `links.jsonl`.
pub fn save_documents(docs: &[Document], dir: &Path) -> Result<(), RetrievalError> {
    fs::create_dir_all(dir)?;
    for ty in DocType::ALL {
        let path = dir.join(format!("{}.jsonl", ty.name()));
        let mut f = fs::File::create(&path)?;
        for d in docs.iter().filter(|d| d.doc_type == ty) {
            let row = Row {
                id: d.id.clone(),
                text: d.text.clone(),
                category: d.category.clone(),
            };
            writeln!(f, "{}", serde_json::to_string(&row).map_err(|e| store_err(&path, e))?)?;
        }
    }
    let path = dir.join(LINKS_FILE);
    let mut f = fs::File::create(&path)?;
    for d in docs {
        for to in &d.links {
            let row = LinkRow {
                from: d.id.clone(),
                to: to.clone(),
            };
            writeln!(f, "{}", serde_json::to_string(&row).map_err(|e| store_err(&path, e))?)?;
        }
    }
    Ok(())
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, RetrievalError> {
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| store_err(path, format!("line {}: {e}", n + 1)))?,
        );
    }
    Ok(out)
}

/// Read a directory written by [`save_documents`]. Missing per-type
/// files are treated as empty.
pub fn load_documents(dir: &Path) -> Result<Vec<Document>, RetrievalError> {
    if !dir.is_dir() {
        return Err(store_err(dir, "not a directory"));
    }
    let mut docs = Vec::new();
    for ty in DocType::ALL {
        let path = dir.join(format!("{}.jsonl", ty.name()));
        if !path.exists() {
            continue;
        }
        for r in read_lines::<Row>(&path)? {
            docs.push(Document {
                id: r.id,
                doc_type: ty,
                text: r.text,
                category: r.category,
                links: Vec::new(),
            });
        }
    }
    let path = dir.join(LINKS_FILE);
    if path.exists() {
        let pos: BTreeMap<String, usize> =
            docs.iter().enumerate().map(|(i, d)| (d.id.clone(), i)).collect();
        for l in read_lines::<LinkRow>(&path)? {
            let i = *pos
                .get(&l.from)
                .ok_or_else(|| store_err(&path, format!("unknown id `{}`", l.from)))?;
            docs[i].links.push(l.to);
        }
    }
    Ok(docs)
}
