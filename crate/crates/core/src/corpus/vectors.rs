use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

/// Pretrained word vectors in GloVe text layout.
///
/// Lookup is total: tokens missing from the table map to `unk`, the
/// component-wise mean of every stored vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    unk: Vec<f64>,
}

impl WordVectorTable {
    /// Builds a table from `(token, vector)` entries. Later duplicates of a
    /// token are ignored.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        if dim == 0 {
            return Err(Error::Invalid("word vector dimension must be positive".into()));
        }
        let mut table = WordVectorTable {
            dim,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
            unk: vec![0.0; dim],
        };
        for (word, vector) in entries {
            if vector.len() != dim {
                return Err(Error::Shape(format!(
                    "vector for {word:?} has length {}, expected {dim}",
                    vector.len()
                )));
            }
            table.push(word, &vector);
        }
        if table.words.is_empty() {
            return Err(Error::Invalid("word vector table is empty".into()));
        }
        table.finish();
        Ok(table)
    }

    fn push(&mut self, word: String, vector: &[f64]) {
        if self.index.contains_key(&word) {
            return;
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
    }

    fn finish(&mut self) {
        let n = self.words.len() as f64;
        let mut unk = vec![0.0; self.dim];
        for row in self.data.chunks_exact(self.dim) {
            for (u, x) in unk.iter_mut().zip(row) {
                *u += x;
            }
        }
        for u in &mut unk {
            *u /= n;
        }
        self.unk = unk;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in load order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Row-major storage, `len() * dim()` values in `words()` order.
    pub fn raw_data(&self) -> &[f64] {
        &self.data
    }

    pub fn unk_vector(&self) -> &[f64] {
        &self.unk
    }

    pub fn contains(&self, token: &str) -> bool {
        self.find(token).is_some()
    }

    fn find(&self, token: &str) -> Option<usize> {
        if let Some(&i) = self.index.get(token) {
            return Some(i);
        }
        // Twitter GloVe stores the special tokens lowercased.
        let lower = token.to_lowercase();
        if lower != token {
            return self.index.get(&lower).copied();
        }
        None
    }

    pub fn lookup(&self, token: &str) -> &[f64] {
        match self.find(token) {
            Some(i) => &self.data[i * self.dim..(i + 1) * self.dim],
            None => &self.unk,
        }
    }
}

/// Reads a whitespace-separated `token v1 ... vd` file.
pub fn load_word_vectors(path: impl AsRef<Path>) -> Result<WordVectorTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut dim = 0usize;
    let mut table: Option<WordVectorTable> = None;
    let mut values = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = lineno + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else {
            continue;
        };
        values.clear();
        for field in fields {
            let v: f64 = field.parse().map_err(|_| {
                Error::format(path, lineno, format!("not a number: {field:?}"))
            })?;
            values.push(v);
        }
        match table.as_mut() {
            None => {
                if values.is_empty() {
                    return Err(Error::format(path, lineno, "line has no vector components"));
                }
                dim = values.len();
                let mut t = WordVectorTable {
                    dim,
                    words: Vec::new(),
                    index: HashMap::new(),
                    data: Vec::new(),
                    unk: Vec::new(),
                };
                t.push(word.to_string(), &values);
                table = Some(t);
            }
            Some(t) => {
                if values.len() != dim {
                    return Err(Error::format(
                        path,
                        lineno,
                        format!("expected {dim} components, found {}", values.len()),
                    ));
                }
                t.push(word.to_string(), &values);
            }
        }
    }
    let mut table = table.ok_or_else(|| Error::format(path, 0, "empty word vector file"))?;
    table.finish();
    Ok(table)
}
