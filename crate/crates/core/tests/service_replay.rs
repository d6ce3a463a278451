mod common;

#[test]
fn kill_and_restart_reproduces_sessions() {
    common::assert_check(&common::service_replay());
}
