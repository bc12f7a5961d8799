//! Reference prices shipped with the binary.

const DATA: &str = include_str!("../data/benchmarks.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub table: u8,
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmarks {
    pub version: u32,
    pub entries: Vec<Benchmark>,
}

impl Benchmarks {
    pub fn embedded() -> Self {
        Self::parse(DATA).expect("embedded benchmark file is well formed")
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut version = None;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            let bad = || format!("benchmarks line {}: cannot parse `{line}`", idx + 1);
            match words.as_slice() {
                ["version", v] => version = Some(v.parse().map_err(|_| bad())?),
                [t, label, v] => entries.push(Benchmark {
                    table: t.parse().map_err(|_| bad())?,
                    label: label.to_string(),
                    value: v.parse().map_err(|_| bad())?,
                }),
                _ => return Err(bad()),
            }
        }
        Ok(Benchmarks {
            version: version.ok_or("benchmarks: missing version line")?,
            entries,
        })
    }

    /// Values of one table in file order.
    pub fn table(&self, table: u8) -> Vec<f64> {
        self.entries.iter().filter(|b| b.table == table).map(|b| b.value).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_file_has_every_table() {
        let b = Benchmarks::embedded();
        assert_eq!(b.version, 1);
        assert_eq!(b.table(1), [7.994716, 7.8318540, 7.2313083]);
        assert_eq!(b.table(2), [9.074102, 8.904514, 8.277985]);
        assert_eq!(b.table(4), [2.0784, 1.3337, 0.7961, 0.4483, 0.2428]);
        assert_eq!(b.table(5), [0.9029, 2.5908, 1.4782]);
        assert_eq!(b.table(6), [1.4012, 8.3003, 21.8216]);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(Benchmarks::parse("version 1\n1 a\n").is_err());
        assert!(Benchmarks::parse("1 a 2.0\n").is_err());
    }
}
