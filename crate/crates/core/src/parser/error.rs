use std::fmt;

use thiserror::Error;

/// A syntax or well-formedness error with a 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct SourceError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// The offending source line.
    pub snippet: String,
}

impl SourceError {
    pub(crate) fn at(src: &str, offset: usize, message: impl Into<String>) -> Self {
        // Positions at end of input are pulled back onto the last character.
        let mut offset = offset.min(src.len());
        if offset == src.len() && offset > 0 {
            offset = src[..offset].char_indices().next_back().map(|(i, _)| i).unwrap_or(0);
        }
        while !src.is_char_boundary(offset) {
            offset -= 1;
        }
        let before = &src[..offset];
        let line = before.matches('\n').count() + 1;
        let line_start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
        let column = src[line_start..offset].chars().count() + 1;
        let line_end = src[line_start..].find('\n').map(|i| line_start + i).unwrap_or(src.len());
        Self { line, column, message: message.into(), snippet: src[line_start..line_end].to_owned() }
    }
}

impl fmt::Display for SourceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        writeln!(f, "  {}", self.snippet)?;
        write!(f, "  {}^", " ".repeat(self.column - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_one_based() {
        let e = SourceError::at("ab\ncd", 4, "x");
        assert_eq!((e.line, e.column, e.snippet.as_str()), (2, 2, "cd"));
        let eof = SourceError::at("ab\n", 3, "eof");
        assert_eq!((eof.line, eof.column), (1, 3));
        let empty = SourceError::at("", 0, "empty");
        assert_eq!((empty.line, empty.column), (1, 1));
    }
}
