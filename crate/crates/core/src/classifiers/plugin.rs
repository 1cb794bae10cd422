//! External classifiers speaking line-delimited JSON over stdio.
//!
//! Each request is `{"id": n, "png_base64": "..."}` on one line; the plugin
//! answers with `{"id": n, "label": "...", "confidence": p}`.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::RasterImage;

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    png_base64: &'a str,
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    label: String,
    confidence: f64,
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

/// A long-running plugin process, started on construction.
pub struct PluginClassifier {
    command: Vec<String>,
    session: Mutex<Session>,
}

impl fmt::Debug for PluginClassifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PluginClassifier")
            .field("command", &self.command)
            .finish_non_exhaustive()
    }
}

impl PluginClassifier {
    pub fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Plugin("empty plugin command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::io(program, e))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            command: command.to_vec(),
            session: Mutex::new(Session {
                child,
                stdin,
                stdout,
                next_id: 0,
            }),
        })
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    /// Sends one crop and waits for its answer.
    pub fn classify(&self, crop: &RasterImage) -> Result<(String, f64)> {
        let png = STANDARD.encode(crop.encode_png()?);
        let mut s = self.session.lock().map_err(|_| Error::Plugin("plugin session poisoned".into()))?;
        let id = s.next_id;
        s.next_id += 1;
        let mut line = serde_json::to_string(&Request { id, png_base64: &png })?;
        line.push('\n');
        let broken = |e: std::io::Error| Error::Plugin(format!("{}: {e}", self.command[0]));
        s.stdin.write_all(line.as_bytes()).map_err(broken)?;
        s.stdin.flush().map_err(broken)?;
        let mut reply = String::new();
        if s.stdout.read_line(&mut reply).map_err(broken)? == 0 {
            return Err(Error::Plugin(format!("{} closed its output", self.command[0])));
        }
        let resp: Response = serde_json::from_str(reply.trim())
            .map_err(|e| Error::Plugin(format!("bad response {:?}: {e}", reply.trim())))?;
        if resp.id != id {
            return Err(Error::Plugin(format!("response id {} for request {id}", resp.id)));
        }
        if !resp.confidence.is_finite() {
            return Err(Error::Plugin("non-finite confidence".into()));
        }
        Ok((resp.label, resp.confidence))
    }
}

impl Drop for PluginClassifier {
    fn drop(&mut self) {
        if let Ok(s) = self.session.get_mut() {
            let _ = s.child.kill();
            let _ = s.child.wait();
        }
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::classifiers::{classify_region, ClassifierHandle, RegionLabel, Role};

    fn echo_plugin(label: &str) -> PluginClassifier {
        let script = format!(
            r#"while read -r line; do id=$(printf '%s' "$line" | sed 's/.*"id":\([0-9]*\).*/\1/'); printf '{{"id":%s,"label":"{label}","confidence":0.8}}\n' "$id"; done"#
        );
        PluginClassifier::spawn(&["sh".into(), "-c".into(), script]).unwrap()
    }

    #[test]
    fn plugin_answers_are_mapped_to_labels() {
        let h = ClassifierHandle::from_plugin(Role::Region3, echo_plugin("both"));
        for _ in 0..3 {
            let p = classify_region(&h, &RasterImage::filled(10, 10, 1, 128)).unwrap();
            assert_eq!(p.label, RegionLabel::Both);
            assert!((p.confidence - 0.8).abs() < 1e-12);
        }
        let probs = h.probabilities(&[RasterImage::filled(10, 10, 1, 0)]).unwrap();
        assert!((probs[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn foreign_label_is_an_error() {
        let h = ClassifierHandle::from_plugin(Role::Region3, echo_plugin("jar"));
        assert!(classify_region(&h, &RasterImage::filled(10, 10, 1, 0)).is_err());
    }

    #[test]
    fn missing_program_names_the_path() {
        let err = PluginClassifier::spawn(&["/nonexistent/classifier".into()]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/classifier"));
    }
}
