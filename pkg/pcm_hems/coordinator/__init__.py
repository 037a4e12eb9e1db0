from pcm_hems.coordinator.coordinator import handle_event, make_jobs, run_project
