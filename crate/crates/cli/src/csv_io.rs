//! Long-format CSV input for multivariate units.
//!
//! The expected layout has one row per subject and coordinate:
//!
//! ```text
//! subject,t,y,x1,...,xq
//! A,1,0.41,1,0
//! A,2,-0.22,0,1
//! B,1,...
//! ```
//!
//! Rows belonging to one subject must be contiguous; within a block the
//! coordinate index `t` must be a permutation of `1..=k`, where `k` is the
//! block length of the first subject. The `x` columns hold the rows of the
//! subject's design matrix.

use mm_estimators::Dataset;
use nalgebra::{DMatrix, DVector};

use crate::CliError;

/// A parsed long-format dataset: the numeric model input plus the subject
/// labels in file order.
#[derive(Debug)]
pub struct LongData {
    pub dataset: Dataset,
    pub subjects: Vec<String>,
}

fn bad_input(context: String) -> CliError {
    CliError::Input { context }
}

/// Read a long-format CSV file into per-subject responses and designs.
pub fn read_long_csv(path: &std::path::Path) -> Result<LongData, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad_input(format!("cannot open {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| bad_input(format!("cannot read header: {e}")))?
        .clone();
    let q = validate_header(&headers)?;

    struct Block {
        label: String,
        // (t, y, x-row) triples in file order.
        rows: Vec<(usize, f64, Vec<f64>)>,
    }
    let mut blocks: Vec<Block> = Vec::new();

    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record.map_err(|e| bad_input(format!("line {line}: {e}")))?;
        if record.len() != 3 + q {
            return Err(bad_input(format!(
                "line {line}: expected {} fields, found {}",
                3 + q,
                record.len()
            )));
        }
        let subject = record[0].to_string();
        let t: usize = record[1]
            .parse()
            .map_err(|_| bad_input(format!("line {line}: coordinate index `{}` is not a positive integer", &record[1])))?;
        let y = parse_number(&record[2], line, "y")?;
        let x_row: Vec<f64> = (0..q)
            .map(|j| parse_number(&record[3 + j], line, headers.get(3 + j).unwrap_or("x")))
            .collect::<Result<_, _>>()?;

        match blocks.last_mut() {
            Some(block) if block.label == subject => block.rows.push((t, y, x_row)),
            _ => {
                if blocks.iter().any(|b| b.label == subject) {
                    return Err(bad_input(format!(
                        "line {line}: subject `{subject}` reappears after its block ended; \
                         rows for one subject must be contiguous"
                    )));
                }
                blocks.push(Block { label: subject, rows: vec![(t, y, x_row)] });
            }
        }
    }

    if blocks.is_empty() {
        return Err(bad_input("the dataset contains no data rows".into()));
    }
    let k = blocks[0].rows.len();

    let mut ys = Vec::with_capacity(blocks.len());
    let mut xs = Vec::with_capacity(blocks.len());
    let mut subjects = Vec::with_capacity(blocks.len());
    for block in &blocks {
        if block.rows.len() != k {
            return Err(bad_input(format!(
                "subject `{}` has {} rows but the first subject has {k}; \
                 all subjects need one row per coordinate",
                block.label,
                block.rows.len()
            )));
        }
        let mut y = DVector::zeros(k);
        let mut x = DMatrix::zeros(k, q);
        let mut seen = vec![false; k];
        for (t, yv, x_row) in &block.rows {
            if *t < 1 || *t > k {
                return Err(bad_input(format!(
                    "subject `{}`: coordinate index {t} outside 1..={k}",
                    block.label
                )));
            }
            if seen[*t - 1] {
                return Err(bad_input(format!(
                    "subject `{}`: coordinate index {t} appears twice",
                    block.label
                )));
            }
            seen[*t - 1] = true;
            y[*t - 1] = *yv;
            for (j, v) in x_row.iter().enumerate() {
                x[(*t - 1, j)] = *v;
            }
        }
        ys.push(y);
        xs.push(x);
        subjects.push(block.label.clone());
    }

    let dataset = Dataset::new(ys, xs)
        .map_err(|e| bad_input(format!("{}: {e}", path.display())))?;
    Ok(LongData { dataset, subjects })
}

fn validate_header(headers: &csv::StringRecord) -> Result<usize, CliError> {
    let fields: Vec<&str> = headers.iter().collect();
    if fields.len() < 4 || fields[0] != "subject" || fields[1] != "t" || fields[2] != "y" {
        return Err(bad_input(format!(
            "header must start with `subject,t,y` followed by at least one x column, got `{}`",
            fields.join(",")
        )));
    }
    for (j, name) in fields[3..].iter().enumerate() {
        let expected = format!("x{}", j + 1);
        if *name != expected {
            return Err(bad_input(format!(
                "design columns must be named x1..x{}, found `{name}` in position {}",
                fields.len() - 3,
                j + 4
            )));
        }
    }
    Ok(fields.len() - 3)
}

fn parse_number(text: &str, line: usize, column: &str) -> Result<f64, CliError> {
    text.parse::<f64>()
        .map_err(|_| bad_input(format!("line {line}: column {column}: `{text}` is not a number")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn reads_a_two_coordinate_file() {
        let file = write_csv(
            "subject,t,y,x1,x2\n\
             A,1,0.5,1,0\n\
             A,2,-0.25,0,1\n\
             B,2,4.0,0,1\n\
             B,1,3.0,1,0\n",
        );
        let data = read_long_csv(file.path()).unwrap();
        assert_eq!(data.dataset.n(), 2);
        assert_eq!(data.dataset.dim(), 2);
        assert_eq!(data.dataset.n_coef(), 2);
        assert_eq!(data.subjects, vec!["A", "B"]);
        // Out-of-order t within the block lands in the right slot.
        assert_eq!(data.dataset.y(1)[0], 3.0);
        assert_eq!(data.dataset.y(1)[1], 4.0);
        assert_eq!(data.dataset.x(0)[(0, 0)], 1.0);
        assert_eq!(data.dataset.x(0)[(1, 1)], 1.0);
    }

    #[test]
    fn rejects_ragged_blocks_and_reappearing_subjects() {
        let ragged = write_csv(
            "subject,t,y,x1\n\
             A,1,0.5,1\n\
             A,2,0.6,1\n\
             B,1,0.7,1\n",
        );
        let err = read_long_csv(ragged.path()).unwrap_err();
        assert!(err.to_string().contains("one row per coordinate"), "{err}");

        let split = write_csv(
            "subject,t,y,x1\n\
             A,1,0.5,1\n\
             B,1,0.7,1\n\
             A,2,0.6,1\n",
        );
        let err = read_long_csv(split.path()).unwrap_err();
        assert!(err.to_string().contains("reappears"), "{err}");
    }

    #[test]
    fn rejects_bad_headers_and_bad_coordinates() {
        let header = write_csv("id,t,y,x1\nA,1,0.5,1\n");
        assert!(read_long_csv(header.path()).is_err());

        let columns = write_csv("subject,t,y,z1\nA,1,0.5,1\n");
        assert!(read_long_csv(columns.path()).is_err());

        let twice = write_csv(
            "subject,t,y,x1\n\
             A,1,0.5,1\n\
             A,1,0.6,1\n",
        );
        let err = read_long_csv(twice.path()).unwrap_err();
        assert!(err.to_string().contains("appears twice"), "{err}");

        let range = write_csv(
            "subject,t,y,x1\n\
             A,1,0.5,1\n\
             A,3,0.6,1\n",
        );
        let err = read_long_csv(range.path()).unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
    }
}
