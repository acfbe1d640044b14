//! LLM stereotype-prevalence audit: neutral prompt stems go to a provider,
//! the continuations come back as numbered lines, a probe labels each line,
//! and P_M is the labelled-stereotype share of the parsed lines.

mod prompts;
mod provider;
mod report;
mod run;

pub use prompts::{
    audit_instruction, build_batch_prompt, bundled_prompts, check_neutrality, load_prompts, parse_prompts,
    parse_response, LoadedPrompts, ParsedResponse, ProbeSentence, SourceDataset, PROMPTS_PER_COMBINATION,
};
pub use provider::{
    load_provider_configs, request_hash, FnProvider, HttpProvider, Provider, ProviderConfig, ReplayEntry, ReplayProvider,
};
pub use report::{
    emit_report, emit_summary_report, load_summary_csv, prevalence, BiasReport, GroupPrevalence, ModelPrevalence,
    SummaryRow,
};
pub use run::{load_run, run_audit, save_run, AuditOptions, AuditRecord, AuditRun};
