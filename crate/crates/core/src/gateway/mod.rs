//! Front ends: the `pact` command line, the HTTP service, and the session
//! store they share.

pub mod cli;
pub mod http;
pub mod store;

pub use cli::run;
pub use http::{router, serve, AppState};
pub use store::{contract_id, load_session, save_session, FileStore, StoreError, StoredSession};
