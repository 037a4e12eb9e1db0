from pcm_hems.storage.results import ResultStore
