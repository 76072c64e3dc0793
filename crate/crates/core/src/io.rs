//! CSV/JSON file formats. Every write goes to a temporary file in the target
//! directory and is renamed into place.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::{ClassHierarchy, Ranking};

pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf)?;
        buf.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Writes a matrix with one named column per class.
pub fn write_matrix<T: Display>(path: &Path, names: &[String], m: &Array2<T>) -> Result<()> {
    write_atomic(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(names)?;
        let mut rec = Vec::with_capacity(m.ncols());
        for row in m.rows() {
            rec.clear();
            rec.extend(row.iter().map(|x| x.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))
    })
}

/// Reads a matrix CSV, returning its header and values.
pub fn read_matrix<T: FromStr>(path: &Path) -> Result<(Vec<String>, Array2<T>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                _ => unreachable!(),
            },
            _ => Error::Csv(e),
        })?;
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != names.len() {
            return Err(Error::SizeMismatch {
                expected: names.len(),
                actual: rec.len(),
            });
        }
        for field in rec.iter() {
            data.push(
                field
                    .parse()
                    .map_err(|_| Error::Parse(format!("{}: bad value `{field}` on row {}", path.display(), rows + 1)))?,
            );
        }
        rows += 1;
    }
    let arr = Array2::from_shape_vec((rows, names.len()), data).map_err(|e| Error::Parse(e.to_string()))?;
    Ok((names, arr))
}

/// Reorders matrix columns to hierarchy class order.
pub fn align_columns<T: Clone>(names: &[String], m: Array2<T>, h: &ClassHierarchy) -> Result<Array2<T>> {
    if names.len() != h.node_count() {
        return Err(Error::SizeMismatch {
            expected: h.node_count(),
            actual: names.len(),
        });
    }
    let cols = h
        .names()
        .iter()
        .map(|n| names.iter().position(|x| x == n).ok_or_else(|| Error::UnknownClass(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    if cols.iter().enumerate().all(|(i, &c)| i == c) {
        return Ok(m);
    }
    Ok(m.select(ndarray::Axis(1), &cols))
}

pub fn read_scores(path: &Path, h: &ClassHierarchy) -> Result<Array2<f64>> {
    let (names, m) = read_matrix::<f64>(path)?;
    if let Some(bad) = m.iter().find(|x| !x.is_finite()) {
        return Err(Error::Parse(format!("{}: non-finite score {bad}", path.display())));
    }
    align_columns(&names, m, h)
}

pub fn read_labels(path: &Path, h: &ClassHierarchy) -> Result<Array2<u8>> {
    let (names, m) = read_matrix::<u8>(path)?;
    if m.iter().any(|&y| y > 1) {
        return Err(Error::Parse(format!("{}: labels must be 0 or 1", path.display())));
    }
    align_columns(&names, m, h)
}

/// Ranking CSV: `rank,object,class,score,value` with 1-based rank.
pub fn write_ranking(path: &Path, r: &Ranking, h: &ClassHierarchy, scores: &[f64], values: &[f64]) -> Result<()> {
    write_atomic(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["rank", "object", "class", "score", "value"])?;
        for (i, e) in r.order.iter().enumerate() {
            wtr.write_record([
                (i + 1).to_string(),
                e.object.to_string(),
                h.name(e.class).to_string(),
                scores[e.flat].to_string(),
                values[e.flat].to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))
    })
}

/// Reads a ranking CSV; returns the ranking and the per-event `value` column
/// indexed by flat event.
pub fn read_ranking(path: &Path, h: &ClassHierarchy) -> Result<(Ranking, Vec<f64>)> {
    let k = h.node_count();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(Error::Csv)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| Error::Parse(format!("{}: missing column `{name}`", path.display())))
    };
    let (ci_rank, ci_obj, ci_class, ci_value) = (col("rank")?, col("object")?, col("class")?, col("value")?);
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse_usize = |i: usize| {
            rec.get(i)
                .unwrap_or("")
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("{}: bad integer in column {i}", path.display())))
        };
        let rank = parse_usize(ci_rank)?;
        let object = parse_usize(ci_obj)?;
        let name = rec.get(ci_class).unwrap_or("");
        let class = h.id(name).ok_or_else(|| Error::UnknownClass(name.to_string()))?;
        let value: f64 = rec
            .get(ci_value)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Parse(format!("{}: bad value", path.display())))?;
        rows.push((rank, object * k + class, value));
    }
    rows.sort_by_key(|r| r.0);
    let n = rows.len();
    let mut values = vec![0.0; n];
    for &(_, flat, v) in &rows {
        if flat >= n {
            return Err(Error::NotAPermutation);
        }
        values[flat] = v;
    }
    let r = Ranking::from_flat(rows.iter().map(|r| r.1), k);
    if !r.is_permutation() {
        return Err(Error::NotAPermutation);
    }
    Ok((r, values))
}

/// Writes `header` then one row per item.
pub fn write_rows<R: IntoIterator<Item = Vec<String>>>(path: &Path, header: &[&str], rows: R) -> Result<()> {
    write_atomic(path, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(header)?;
        for row in rows {
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))
    })
}

pub fn write_hierarchy(path: &Path, h: &ClassHierarchy) -> Result<()> {
    write_atomic(path, |w| h.write_csv(w))
}
