pub mod document;
pub mod export;
pub mod server;
pub mod session;

pub use document::{parse_document, DocumentError, EdgeSpec, PolygonDocument, ScheduleEntry};
pub use session::{Edit, ExportFormat, JournalEntry, Session};
