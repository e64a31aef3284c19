//! Category list files: one `id|comment|r,g,b` line per live category.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::category::Category;
use crate::error::{Error, Result};

pub const CATEGORY_FILE_NAME: &str = "categories.txt";

const WHAT: &str = "category file";

pub fn format_categories(categories: &[Category]) -> Result<String> {
    let mut out = String::new();
    for c in categories.iter().filter(|c| !c.deleted) {
        if c.comment.contains(['|', '\n', '\r']) {
            return Err(Error::invalid(
                "category",
                format!("comment of category {} contains '|' or a line break", c.id),
            ));
        }
        let [r, g, b] = c.color;
        writeln!(out, "{}|{}|{r},{g},{b}", c.id, c.comment).expect("writing to a String");
    }
    Ok(out)
}

pub fn parse_categories(text: &str) -> Result<Vec<Category>> {
    let mut out: Vec<Category> = Vec::new();
    for (i, line) in text.split('\n').enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse {
            what: WHAT,
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected id|comment|r,g,b, got {} field(s)", fields.len())));
        }
        let id: u32 = fields[0]
            .parse()
            .ok()
            .filter(|&id| id > 0)
            .ok_or_else(|| err(format!("id {:?} is not a positive integer", fields[0])))?;
        if out.iter().any(|c| c.id == id) {
            return Err(err(format!("duplicate id {id}")));
        }
        let rgb: Vec<u8> = fields[2]
            .split(',')
            .map(|v| v.trim().parse::<u8>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(format!("colour {:?} is not r,g,b in 0..=255", fields[2])))?;
        let color: [u8; 3] = rgb
            .try_into()
            .map_err(|_| err(format!("colour {:?} needs three components", fields[2])))?;
        out.push(Category::new(id, fields[1], color));
    }
    Ok(out)
}

pub fn save_categories(categories: &[Category], path: &Path) -> Result<()> {
    let text = format_categories(categories)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_categories(path: &Path) -> Result<Vec<Category>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_categories(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_is_empty_file() {
        assert_eq!(format_categories(&[]).unwrap(), "");
        assert!(parse_categories("").unwrap().is_empty());
    }

    #[test]
    fn round_trip_three() {
        let cats = vec![
            Category::new(1, "person", [128, 0, 0]),
            Category::new(2, "road sign", [0, 128, 0]),
            Category::new(7, "", [1, 2, 3]),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(CATEGORY_FILE_NAME);
        save_categories(&cats, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "1|person|128,0,0\n2|road sign|0,128,0\n7||1,2,3\n");
        assert_eq!(load_categories(&path).unwrap(), cats);
    }

    #[test]
    fn deleted_categories_are_not_written() {
        let mut gone = Category::new(2, "old", [0, 0, 0]);
        gone.deleted = true;
        let text = format_categories(&[Category::new(1, "a", [1, 1, 1]), gone]).unwrap();
        assert_eq!(text, "1|a|1,1,1\n");
    }

    #[test]
    fn malformed_lines_report_position() {
        match parse_categories("x|y") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_categories("1|a|1,2,3\n2|b|1,2") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_categories("0|zero|1,2,3").is_err());
        assert!(parse_categories("1|a|1,2,3\n1|b|1,2,3").is_err());
        assert!(format_categories(&[Category::new(1, "a|b", [0, 0, 0])]).is_err());
    }
}
