from .kernel_views import StatsView, SynthesisView
