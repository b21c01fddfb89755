//! Line-oriented wire format: `Label(v1,v2,...)\n`.
//!
//! Integers are decimal with an optional leading `-` and no leading zeros,
//! strings are double-quoted with the escapes `\" \\ \n \t`, booleans are
//! `true`/`false`, and tuples nest in parentheses. Nothing but the LF
//! terminator appears outside the frame, and whitespace only inside strings.
//! Decoding accepts exactly the canonical encodings, so re-encoding a
//! decoded frame reproduces its bytes.

use std::io::{self, BufRead, Write};

use sessmon_core::model::{is_identifier, Label, Message, Value};
use thiserror::Error;

/// Largest accepted frame, terminator included.
pub const MAX_FRAME: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame longer than {MAX_FRAME} bytes")]
    Oversize,
    #[error("malformed frame at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: &'static str },
    #[error("unknown escape `\\{0}`")]
    UnknownEscape(char),
    #[error("connection closed inside a frame")]
    Truncated,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Translates between wire frames and messages.
pub trait ConnectionManager: Send + Sync {
    fn encode(&self, msg: &Message) -> Vec<u8>;

    /// Decodes one complete frame, terminator included.
    fn decode(&self, frame: &[u8]) -> Result<Message, FrameError>;

    /// Reads one raw frame; `Ok(None)` on a clean end of stream.
    fn read_frame(&self, r: &mut dyn BufRead) -> Result<Option<Vec<u8>>, FrameError>;

    fn write_message(&self, w: &mut dyn Write, msg: &Message) -> io::Result<()> {
        w.write_all(&self.encode(msg))?;
        w.flush()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LineCodec;

pub fn line_codec() -> LineCodec {
    LineCodec
}

impl ConnectionManager for LineCodec {
    fn encode(&self, msg: &Message) -> Vec<u8> {
        let mut out = String::with_capacity(16);
        out.push_str(msg.label.as_str());
        out.push('(');
        write_values(&mut out, &msg.payload);
        out.push_str(")\n");
        out.into_bytes()
    }

    fn decode(&self, frame: &[u8]) -> Result<Message, FrameError> {
        if frame.len() > MAX_FRAME {
            return Err(FrameError::Oversize);
        }
        let text = std::str::from_utf8(frame).map_err(|e| FrameError::Malformed {
            offset: e.valid_up_to(),
            reason: "invalid UTF-8",
        })?;
        Decoder { src: text, pos: 0 }.frame()
    }

    fn read_frame(&self, r: &mut dyn BufRead) -> Result<Option<Vec<u8>>, FrameError> {
        let mut frame = Vec::new();
        loop {
            let buf = match r.fill_buf() {
                Ok(b) => b,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            };
            if buf.is_empty() {
                return if frame.is_empty() { Ok(None) } else { Err(FrameError::Truncated) };
            }
            let (take, done) = match buf.iter().position(|&b| b == b'\n') {
                Some(i) => (i + 1, true),
                None => (buf.len(), false),
            };
            if frame.len() + take > MAX_FRAME {
                return Err(FrameError::Oversize);
            }
            frame.extend_from_slice(&buf[..take]);
            r.consume(take);
            if done {
                return Ok(Some(frame));
            }
        }
    }
}

fn write_values(out: &mut String, values: &[Value]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_value(out, v);
    }
}

fn write_value(out: &mut String, v: &Value) {
    match v {
        Value::Int(n) => out.push_str(&n.to_string()),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Str(s) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        Value::Tuple(items) => {
            out.push('(');
            write_values(out, items);
            out.push(')');
        }
    }
}

struct Decoder<'a> {
    src: &'a str,
    pos: usize,
}

impl Decoder<'_> {
    fn err<T>(&self, reason: &'static str) -> Result<T, FrameError> {
        Err(FrameError::Malformed { offset: self.pos, reason })
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char, reason: &'static str) -> Result<(), FrameError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.err(reason)
        }
    }

    fn frame(mut self) -> Result<Message, FrameError> {
        let end = self.src[self.pos..].find('(').map_or(self.src.len(), |i| self.pos + i);
        let label = &self.src[self.pos..end];
        if !is_identifier(label) {
            return self.err("expected a label");
        }
        self.pos = end;
        self.expect('(', "expected `(`")?;
        let payload = self.values(')')?;
        self.expect(')', "expected `)`")?;
        self.expect('\n', "expected end of line")?;
        if self.pos != self.src.len() {
            return self.err("trailing bytes after the frame");
        }
        Ok(Message::new(Label::new(label), payload))
    }

    fn values(&mut self, close: char) -> Result<Vec<Value>, FrameError> {
        let mut out = Vec::new();
        if self.peek() == Some(close) {
            return Ok(out);
        }
        loop {
            out.push(self.value()?);
            if self.peek() == Some(',') {
                self.pos += 1;
            } else {
                return Ok(out);
            }
        }
    }

    fn value(&mut self) -> Result<Value, FrameError> {
        match self.peek() {
            Some('"') => self.string(),
            Some('(') => {
                self.pos += 1;
                let items = self.values(')')?;
                if items.is_empty() {
                    return self.err("empty tuple");
                }
                self.expect(')', "expected `)`")?;
                Ok(Value::Tuple(items))
            }
            Some('-' | '0'..='9') => self.int(),
            Some('t' | 'f') => self.boolean(),
            _ => self.err("expected a value"),
        }
    }

    fn boolean(&mut self) -> Result<Value, FrameError> {
        for (word, b) in [("true", true), ("false", false)] {
            if self.src[self.pos..].starts_with(word) {
                self.pos += word.len();
                return Ok(Value::Bool(b));
            }
        }
        self.err("expected a value")
    }

    fn int(&mut self) -> Result<Value, FrameError> {
        let start = self.pos;
        let negative = self.peek() == Some('-');
        if negative {
            self.pos += 1;
        }
        let digits = self.src[self.pos..].bytes().take_while(u8::is_ascii_digit).count();
        let body = &self.src[self.pos..self.pos + digits];
        if digits == 0 {
            return self.err("expected digits");
        }
        if (digits > 1 && body.starts_with('0')) || (negative && body == "0") {
            return self.err("non-canonical integer");
        }
        self.pos += digits;
        match self.src[start..self.pos].parse::<i64>() {
            Ok(n) => Ok(Value::Int(n)),
            Err(_) => Err(FrameError::Malformed { offset: start, reason: "integer out of range" }),
        }
    }

    fn string(&mut self) -> Result<Value, FrameError> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let Some(c) = self.peek() else { return self.err("unterminated string") };
            self.pos += c.len_utf8();
            match c {
                '"' => return Ok(Value::Str(out)),
                '\n' => return self.err("raw line feed in string"),
                '\\' => {
                    let Some(e) = self.peek() else { return self.err("unterminated string") };
                    self.pos += e.len_utf8();
                    out.push(match e {
                        '"' => '"',
                        '\\' => '\\',
                        'n' => '\n',
                        't' => '\t',
                        other => return Err(FrameError::UnknownEscape(other)),
                    });
                }
                c => out.push(c),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decode(s: &str) -> Result<Message, FrameError> {
        LineCodec.decode(s.as_bytes())
    }

    #[test]
    fn encodes_auth() {
        let m = Message::new("Auth", vec![Value::str("Bob"), Value::str("pwd")]);
        assert_eq!(LineCodec.encode(&m), b"Auth(\"Bob\",\"pwd\")\n");
    }

    #[test]
    fn decodes_fail() {
        assert_eq!(decode("Fail(1)\n").unwrap(), Message::new("Fail", vec![Value::Int(1)]));
        assert_eq!(decode("Quit()\n").unwrap(), Message::new("Quit", vec![]));
        assert_eq!(
            decode("P(-5,true,(1,false),\"a\\\"b\\\\\\n\\t\")\n").unwrap().payload,
            vec![
                Value::Int(-5),
                Value::Bool(true),
                Value::Tuple(vec![Value::Int(1), Value::Bool(false)]),
                Value::str("a\"b\\\n\t")
            ]
        );
    }

    #[test]
    fn rejects_non_canonical_and_malformed_frames() {
        for bad in [
            "Fail(01)\n",
            "Fail(-0)\n",
            "Fail(+1)\n",
            "Fail( 1)\n",
            "Fail(1)",
            "Fail(1)\r\n",
            "Fail(1)\nX",
            "1Fail(1)\n",
            "(1)\n",
            "Fail(1,)\n",
            "Fail(())\n",
            "Fail(tru)\n",
            "Fail(\"x)\n",
            "Fail(99999999999999999999)\n",
        ] {
            assert!(decode(bad).is_err(), "{bad:?}");
        }
        assert!(matches!(decode("S(\"\\q\")\n"), Err(FrameError::UnknownEscape('q'))));
    }

    #[test]
    fn i64_bounds_round_trip() {
        for n in [i64::MIN, i64::MAX, 0, -1] {
            let m = Message::new("N", vec![Value::Int(n)]);
            assert_eq!(decode(std::str::from_utf8(&LineCodec.encode(&m)).unwrap()).unwrap(), m);
        }
    }

    #[test]
    fn reads_frames_and_enforces_the_size_limit() {
        let data = b"A(1)\nB(\"x\")\n".to_vec();
        let mut r = io::BufReader::with_capacity(3, &data[..]);
        assert_eq!(LineCodec.read_frame(&mut r).unwrap().unwrap(), b"A(1)\n");
        assert_eq!(LineCodec.read_frame(&mut r).unwrap().unwrap(), b"B(\"x\")\n");
        assert!(LineCodec.read_frame(&mut r).unwrap().is_none());

        let mut r = &b"A(1"[..];
        assert!(matches!(LineCodec.read_frame(&mut r), Err(FrameError::Truncated)));

        let mut big = format!("S(\"{}\")\n", "x".repeat(MAX_FRAME));
        let mut r = big.as_bytes();
        assert!(matches!(LineCodec.read_frame(&mut r), Err(FrameError::Oversize)));
        big = format!("S(\"{}\")\n", "x".repeat(MAX_FRAME - 6));
        assert_eq!(big.len(), MAX_FRAME);
        let mut r = big.as_bytes();
        assert!(LineCodec.decode(&LineCodec.read_frame(&mut r).unwrap().unwrap()).is_ok());
    }
}
