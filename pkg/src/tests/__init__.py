# Test suite for the occumotion toolkit
